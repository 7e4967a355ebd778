use std::path::{Path, PathBuf};

use crisisdyn::collectivity::{collectivity_series, correlation_distribution, log_returns, ReturnPanel};
use crisisdyn::diversification::{greedy_path, marginal_means, mu_table, SamplingConfig};
use crisisdyn::distribution_align::{align_and_cluster_with, Linkage, Order};
use crisisdyn::market_data::{default_crises, find_crisis, load_crises, load_panel, write_panel};
use crisisdyn::portfolio_search::{crisis_allocation_matrix, run_search, SearchConfig, SectorAllocation};
use crisisdyn::synthetic::{generate, FactorModelSpec};
use crisisdyn::{CrisisWindow, PricePanel, Sector};
use serde_json::json;

use crate::args::*;
use crate::output::{header, FileDigest, OutputDir};
use crate::Failure;

/// Files written by a command, plus the inputs it read.
pub struct Written {
    pub dir: PathBuf,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<FileDigest>,
}

struct Loaded {
    panel: PricePanel,
    crises: Vec<CrisisWindow>,
    inputs: Vec<PathBuf>,
}

fn load(args: &PanelArgs) -> Result<Loaded, Failure> {
    let loaded = load_panel(&args.prices, &args.sectors)?;
    for d in &loaded.dropped {
        log::warn!("dropped {}: {}", d.ticker, d.reason);
    }
    let mut inputs = vec![args.prices.clone(), args.sectors.clone()];
    let crises = match &args.crises {
        Some(path) => {
            inputs.push(path.clone());
            load_crises(path)?
        }
        None => default_crises(),
    };
    Ok(Loaded { panel: loaded.panel, crises, inputs })
}

fn select(all: &[CrisisWindow], names: &[String]) -> Result<Vec<CrisisWindow>, Failure> {
    if names.is_empty() {
        return Ok(all.to_vec());
    }
    names.iter().map(|n| Ok(find_crisis(all, n)?.clone())).collect()
}

fn returns_in(loaded: &Loaded, crisis: Option<&str>) -> Result<ReturnPanel, Failure> {
    match crisis {
        Some(name) => Ok(log_returns(&loaded.panel.slice_window(find_crisis(&loaded.crises, name)?)?)?),
        None => Ok(log_returns(&loaded.panel)?),
    }
}

fn f(v: f64) -> String {
    v.to_string()
}

fn finish(out: OutputDir, inputs: Vec<PathBuf>) -> Result<Written, Failure> {
    Ok(Written { dir: out.dir().to_path_buf(), outputs: out.digests()?, inputs })
}

pub fn corrdist(args: &CorrdistArgs) -> Result<Written, Failure> {
    let loaded = load(&args.panel)?;
    let crises = select(&loaded.crises, &args.crisis)?;
    let mut values = Vec::new();
    let mut summary = Vec::new();
    for crisis in &crises {
        let dist = correlation_distribution(&loaded.panel, crisis)?;
        summary.push(vec![
            crisis.name.clone(),
            dist.len().to_string(),
            f(dist.mean()),
            f(dist.quantile(0.5)),
            f(dist.quantile(0.25)),
            f(dist.quantile(0.75)),
        ]);
        values.extend(dist.sample().iter().map(|v| vec![crisis.name.clone(), f(*v)]));
    }
    let mut out = OutputDir::create(&args.run.out)?;
    out.csv("corrdist.csv", &header(&["crisis", "correlation"]), values)?;
    out.csv("corrdist_summary.csv", &header(&["crisis", "pairs", "mean", "median", "q25", "q75"]), summary)?;
    finish(out, loaded.inputs)
}

pub fn collectivity(args: &CollectivityArgs) -> Result<Written, Failure> {
    let loaded = load(&args.panel)?;
    let returns = returns_in(&loaded, args.crisis.as_deref())?;
    let series = collectivity_series(&returns, args.window)?;
    let k = args.k.clamp(1, returns.n_assets());
    if k != args.k {
        log::warn!("k={} clamped to {k}", args.k);
    }
    let mut head = header(&["t", "date"]);
    head.extend((1..=k).map(|i| format!("lambda{i}")));
    let rows = series.timestamps.iter().zip(&series.dates).zip(&series.spectra).map(|((t, d), s)| {
        let mut row = vec![t.to_string(), d.to_string()];
        row.extend(s[..k].iter().map(|v| f(*v)));
        row
    });
    let mut out = OutputDir::create(&args.run.out)?;
    out.csv("collectivity.csv", &head, rows)?;
    finish(out, loaded.inputs)
}

pub fn divpath(args: &DivpathArgs) -> Result<Written, Failure> {
    let loaded = load(&args.panel)?;
    let returns = returns_in(&loaded, args.crisis.as_deref())?;
    let config = SamplingConfig {
        w_range: 2..=args.w_max,
        a_range: 2..=args.a_max,
        draws: args.draws,
        window: args.window,
        seed: args.run.seed,
        keep_median_series: false,
    };
    let table = mu_table(&returns, &config)?;
    let path = greedy_path(&table);
    let marginals = marginal_means(&table);

    let mut head = header(&["a\\w"]);
    head.extend(table.w_values.iter().map(|w| w.to_string()));
    let rows = table.a_values.iter().zip(table.rows()).map(|(a, r)| {
        let mut row = vec![a.to_string()];
        row.extend(r.iter().map(|v| f(*v)));
        row
    });
    let mut out = OutputDir::create(&args.run.out)?;
    out.csv("mu_table.csv", &head, rows)?;
    out.csv(
        "greedy_path.csv",
        &header(&["step", "w", "a", "mu"]),
        path.steps.iter().enumerate().map(|(i, s)| vec![i.to_string(), s.w.to_string(), s.a.to_string(), f(s.mu)]),
    )?;
    let within = marginals.within_sector.iter().map(|(w, mu)| vec!["w".to_string(), w.to_string(), f(*mu)]);
    let across = marginals.across_sector.iter().map(|(a, mu)| vec!["a".to_string(), a.to_string(), f(*mu)]);
    out.csv("marginals.csv", &header(&["axis", "value", "mu"]), within.chain(across))?;
    finish(out, loaded.inputs)
}

pub fn align(args: &AlignArgs) -> Result<Written, Failure> {
    let loaded = load(&args.panel)?;
    let crises = select(&loaded.crises, &args.crisis)?;
    let linkage: Linkage = args.linkage.parse()?;
    let order = if args.order2 { Order::Two } else { Order::One };
    let result = align_and_cluster_with(&loaded.panel, &crises, &args.reference, linkage, order)?;
    let labels: Vec<String> = result.labels.iter().map(|l| l.to_string()).collect();

    let mut out = OutputDir::create(&args.run.out)?;
    out.csv(
        "operators.csv",
        &header(&["crisis", "scale", "shift", "residual", "scale_identified"]),
        result.operators.iter().map(|o| {
            vec![
                o.crisis.clone(),
                f(o.fit.operator.scale),
                f(o.fit.operator.shift),
                f(o.fit.residual),
                o.fit.scale_identified.to_string(),
            ]
        }),
    )?;
    let mut head = header(&["label"]);
    head.extend(labels.iter().cloned());
    out.csv(
        "distmatrix.csv",
        &head,
        labels.iter().enumerate().map(|(i, l)| {
            let mut row = vec![l.clone()];
            row.extend((0..labels.len()).map(|j| f(result.distances[(i, j)])));
            row
        }),
    )?;
    out.json(
        "dendrogram.json",
        &json!({
            "linkage": args.linkage.to_lowercase(),
            "labels": labels,
            "merges": result.dendrogram.merges,
            "leaf_order": result.dendrogram.leaf_order(),
            "tree": result.dendrogram.tree(),
            "omitted": result.omitted.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        }),
    )?;
    finish(out, loaded.inputs)
}

fn search_config(opts: &SearchOptions, seed: u64) -> SearchConfig {
    SearchConfig {
        n_draws: opts.draws,
        portfolio_size: opts.portfolio_size,
        top_fraction: opts.top_fraction,
        risk_free_rate: opts.risk_free,
        seed,
    }
}

pub fn search(args: &SearchArgs) -> Result<Written, Failure> {
    let loaded = load(&args.panel)?;
    let returns = returns_in(&loaded, args.crisis.as_deref())?;
    let result = run_search(&returns, &search_config(&args.search, args.run.seed))?;
    let index = SectorAllocation::index_of(returns.sectors())?;

    let mut out = OutputDir::create(&args.run.out)?;
    out.csv(
        "allocation.csv",
        &header(&["sector", "top", "index"]),
        Sector::ALL.iter().map(|&s| vec![s.name().to_string(), f(result.allocation.get(s)), f(index.get(s))]),
    )?;
    out.csv(
        "top_portfolios.csv",
        &header(&["rank", "draw", "sharpe", "tickers"]),
        result.top.iter().enumerate().map(|(i, p)| {
            let tickers: Vec<&str> = p.members.iter().map(|&j| returns.tickers()[j].as_str()).collect();
            vec![(i + 1).to_string(), p.draw.to_string(), f(p.sharpe), tickers.join(";")]
        }),
    )?;
    finish(out, loaded.inputs)
}

pub fn matrix(args: &MatrixArgs) -> Result<Written, Failure> {
    let loaded = load(&args.panel)?;
    let crises = select(&loaded.crises, &args.crisis)?;
    let m = crisis_allocation_matrix(&loaded.panel, &crises, &search_config(&args.search, args.run.seed))?;

    let mut out = OutputDir::create(&args.run.out)?;
    let mut head = header(&["label"]);
    head.extend(m.labels.iter().cloned());
    out.csv(
        "allocation_distances.csv",
        &head,
        m.labels.iter().zip(&m.distances).map(|(l, row)| {
            let mut r = vec![l.clone()];
            r.extend(row.iter().map(|v| f(*v)));
            r
        }),
    )?;
    let mut head = header(&["sector"]);
    head.extend(m.labels.iter().cloned());
    out.csv(
        "allocations.csv",
        &head,
        Sector::ALL.iter().map(|&s| {
            let mut r = vec![s.name().to_string()];
            r.extend(m.allocations.iter().map(|a| f(a.get(s))));
            r
        }),
    )?;
    finish(out, loaded.inputs)
}

pub fn synth(args: &SynthArgs) -> Result<Written, Failure> {
    if args.out.len() != 2 {
        return Err(Failure::config("--out takes two paths: prices.csv,sectors.csv".into()));
    }
    let text = std::fs::read_to_string(&args.spec).map_err(|e| Failure::config(format!("{}: {e}", args.spec.display())))?;
    let spec = FactorModelSpec::from_toml(&text)?;
    let panel = generate(&spec)?;
    let (prices, sectors) = (&args.out[0], &args.out[1]);
    for p in [prices, sectors] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    write_panel(&panel, prices, sectors)?;
    let dir = prices.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf();
    let outputs = [prices, sectors]
        .iter()
        .map(|p| Ok(FileDigest { path: p.display().to_string(), sha256: crate::output::sha256_file(p)? }))
        .collect::<Result<_, Failure>>()?;
    Ok(Written { dir, inputs: vec![args.spec.clone()], outputs })
}
