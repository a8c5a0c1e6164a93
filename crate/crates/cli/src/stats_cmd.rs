use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use impactid::signal::{ConditionKey, FootType};
use impactid::stats::{
    format_alpha, format_p, friedman_with, kruskal_wallis, pairwise_wilcoxon, steel_dwass, FriedmanMethod,
    PairwiseTable, StatResult, EXACT_LIMIT,
};

use crate::config::{ConfigArgs, RunConfig};
use crate::format::sig6;
use crate::rows::{read_ident_csv, IdentRow, IDENT_CSV};
use crate::{Outcome, UsageError};

pub const STATS_CSV: &str = "stats.csv";
pub const STATS_TXT: &str = "stats.txt";

/// Which condition field is compared. Skeleton uses independent groups
/// (Kruskal–Wallis, Steel–Dwass); ankle and toe pair trials by trial index
/// (Friedman, Bonferroni-corrected Wilcoxon signed-rank).
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Grouping {
    Skeleton,
    Ankle,
    Toe,
}

impl Grouping {
    fn name(self) -> &'static str {
        match self {
            Grouping::Skeleton => "skeleton",
            Grouping::Ankle => "ankle",
            Grouping::Toe => "toe",
        }
    }

    /// The condition with the compared field blanked, identifying a stratum.
    fn stratum(self, c: &ConditionKey) -> ConditionKey {
        let mut s = *c;
        match self {
            Grouping::Skeleton => s.foot_type = FootType::Flat,
            Grouping::Ankle => s.theta_a_deg = 0.0,
            Grouping::Toe => s.theta_t_deg = 0.0,
        }
        s
    }

    fn level(self, c: &ConditionKey) -> String {
        match self {
            Grouping::Skeleton => {
                let s = c.foot_type.as_str();
                s[..1].to_uppercase() + &s[1..]
            }
            Grouping::Ankle => format!("theta_a = {} deg", c.theta_a_deg),
            Grouping::Toe => format!("theta_t = {} deg", c.theta_t_deg),
        }
    }

    fn stratum_fields(self, s: &ConditionKey) -> [String; 4] {
        let mut f = [
            s.foot_type.to_string(),
            s.theta_a_deg.to_string(),
            s.theta_t_deg.to_string(),
            s.drop_height_mm.to_string(),
        ];
        let blank = match self {
            Grouping::Skeleton => 0,
            Grouping::Ankle => 1,
            Grouping::Toe => 2,
        };
        f[blank] = "*".into();
        f
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Per-trial results from `identify` (default: <out-dir>/ident.csv)
    #[arg(long)]
    pub ident: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub grouping: Grouping,
}

type Metric = fn(&IdentRow) -> f64;

const METRICS: [(&str, Metric); 4] =
    [("peak_force", |r| r.peak_force), ("k", |r| r.k), ("c", |r| r.c), ("zeta", |r| r.zeta)];

struct Battery {
    stratum: ConditionKey,
    metric: &'static str,
    levels: Vec<String>,
    omnibus: StatResult,
    pairs: PairwiseTable,
}

type Strata = BTreeMap<ConditionKey, BTreeMap<ConditionKey, Vec<IdentRow>>>;

fn stratify(rows: &[IdentRow], grouping: Grouping) -> Strata {
    let mut strata = Strata::new();
    for r in rows {
        let c = r.condition();
        strata.entry(grouping.stratum(&c)).or_default().entry(c).or_default().push(r.clone());
    }
    strata
}

fn independent(
    levels: &BTreeMap<ConditionKey, Vec<IdentRow>>,
    metric: Metric,
    alpha: f64,
) -> Result<(StatResult, PairwiseTable)> {
    let groups: Vec<Vec<f64>> = levels.values().map(|rows| rows.iter().map(metric).collect()).collect();
    Ok((kruskal_wallis(&groups)?.with_alpha(alpha), steel_dwass(&groups)?.with_alpha(alpha)))
}

fn paired(
    levels: &BTreeMap<ConditionKey, Vec<IdentRow>>,
    metric: Metric,
    cfg: &RunConfig,
) -> Result<(StatResult, PairwiseTable)> {
    let by_trial: Vec<BTreeMap<u32, f64>> =
        levels.values().map(|rows| rows.iter().map(|r| (r.trial, metric(r))).collect()).collect();
    let common: Vec<u32> = by_trial[0].keys().copied().filter(|t| by_trial.iter().all(|m| m.contains_key(t))).collect();
    let blocks: Vec<Vec<f64>> = common.iter().map(|t| by_trial.iter().map(|m| m[t]).collect()).collect();
    let treatments: Vec<Vec<f64>> = by_trial.iter().map(|m| common.iter().map(|t| m[t]).collect()).collect();
    let arrangements = (1..=levels.len()).map(|i| i as f64).product::<f64>().powi(common.len() as i32);
    let method = if arrangements <= EXACT_LIMIT {
        FriedmanMethod::Exact
    } else {
        FriedmanMethod::MonteCarlo { draws: cfg.draws, seed: cfg.seed }
    };
    let omnibus = friedman_with(&blocks, method)?.with_alpha(cfg.alpha);
    Ok((omnibus, pairwise_wilcoxon(&treatments, cfg.alpha)?))
}

fn batteries(rows: &[IdentRow], grouping: Grouping, cfg: &RunConfig) -> (Vec<Battery>, Vec<String>) {
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for (stratum, levels) in stratify(rows, grouping) {
        if levels.len() < 2 {
            continue;
        }
        let names: Vec<String> = levels.keys().map(|c| grouping.level(c)).collect();
        for (metric, f) in METRICS {
            let result = match grouping {
                Grouping::Skeleton => independent(&levels, f, cfg.alpha),
                Grouping::Ankle | Grouping::Toe => paired(&levels, f, cfg),
            };
            match result {
                Ok((omnibus, mut pairs)) => {
                    pairs.labels = names.clone();
                    out.push(Battery { stratum, metric, levels: names.clone(), omnibus, pairs });
                }
                Err(e) => failures.push(format!("{} {metric}: {e}", grouping.stratum_fields(&stratum).join("/"))),
            }
        }
    }
    (out, failures)
}

fn test_abbrev(r: &StatResult) -> &'static str {
    use impactid::stats::TestKind::*;
    match r.test {
        KruskalWallis => "K.W.",
        SteelDwassPair => "S.D.",
        Friedman => "Fri.",
        WilcoxonSignedRank => "W.S.R.",
    }
}

fn starred(r: &StatResult) -> String {
    format_p(r.p) + if r.significant { "*" } else { "" }
}

fn write_csv(path: &Path, grouping: Grouping, batteries: &[Battery]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "grouping",
        "metric",
        "foot_type",
        "theta_a_deg",
        "theta_t_deg",
        "drop_height_mm",
        "test",
        "comparison",
        "statistic",
        "p",
        "alpha",
        "significant",
        "method",
        "mc_se",
    ])?;
    for b in batteries {
        let fields = grouping.stratum_fields(&b.stratum);
        let mut row = |comparison: String, r: &StatResult| {
            let mut rec = vec![grouping.name().to_string(), b.metric.to_string()];
            rec.extend(fields.iter().cloned());
            rec.extend([
                r.test.as_str().to_string(),
                comparison,
                sig6(r.statistic),
                format!("{:.4}", r.p),
                sig6(r.alpha),
                r.significant.to_string(),
                r.method.as_str().to_string(),
                r.mc_se.map(sig6).unwrap_or_default(),
            ]);
            w.write_record(rec)
        };
        row("omnibus".into(), &b.omnibus)?;
        for p in &b.pairs.pairs {
            row(format!("{} vs {}", b.levels[p.a], b.levels[p.b]), &p.result)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn render_text(grouping: Grouping, batteries: &[Battery]) -> String {
    let mut s = String::new();
    let mut current: Option<ConditionKey> = None;
    for b in batteries {
        if current != Some(b.stratum) {
            let st = &b.stratum;
            let context = match grouping {
                Grouping::Skeleton => format!("theta_a = {} deg, theta_t = {} deg", st.theta_a_deg, st.theta_t_deg),
                Grouping::Ankle => format!("{} foot, theta_t = {} deg", st.foot_type, st.theta_t_deg),
                Grouping::Toe => format!("{} foot, theta_a = {} deg", st.foot_type, st.theta_a_deg),
            };
            let _ = writeln!(s, "\n{} | {context} | h = {} mm", grouping.name(), st.drop_height_mm);
            current = Some(b.stratum);
        }
        let o = &b.omnibus;
        let _ = writeln!(
            s,
            "  {:<11} {:<7} {:<12} (alpha = {})",
            b.metric,
            test_abbrev(o),
            starred(o),
            format_alpha(o.alpha)
        );
        if let Some(first) = b.pairs.pairs.first() {
            let _ = writeln!(
                s,
                "  {:<11} {:<7} (alpha = {})",
                "",
                test_abbrev(&first.result),
                format_alpha(first.result.alpha)
            );
        }
        for p in &b.pairs.pairs {
            let label = format!("{} vs {}", b.levels[p.a], b.levels[p.b]);
            let _ = writeln!(s, "  {:<19} {:<40} {}", "", label, starred(&p.result));
        }
    }
    s
}

pub fn run(args: &StatsArgs) -> Result<Outcome> {
    let cfg = args.config.resolve()?;
    let out_dir = cfg.out_dir();
    let ident = args.ident.clone().unwrap_or_else(|| out_dir.join(IDENT_CSV));
    if !ident.exists() {
        return Err(UsageError(format!("{}: no identification results", ident.display())).into());
    }
    let rows = read_ident_csv(&ident)?;
    let (batteries, failures) = batteries(&rows, args.grouping, &cfg);
    for f in &failures {
        eprintln!("error: {f}");
    }
    if batteries.is_empty() && failures.is_empty() {
        return Err(anyhow::anyhow!(
            "insufficient data: no stratum of {} has two or more {} levels",
            ident.display(),
            args.grouping.name()
        ));
    }
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_csv(&out_dir.join(STATS_CSV), args.grouping, &batteries)?;
    let text = render_text(args.grouping, &batteries);
    std::fs::write(out_dir.join(STATS_TXT), text.trim_start()).context("writing stats table")?;
    print!("{}", text.trim_start());
    Ok(if failures.is_empty() { Outcome::Clean } else { Outcome::PartialFailure })
}
