//! Scenario descriptions.
//!
//! A scenario file is flat `key = value` text; blank lines and `#` comments
//! are ignored and unknown keys are errors. Every key has a default, so a
//! file only names what differs from the defaults below.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `name` | `scenario` | identifier written to every CSV row |
//! | `env` | `gsp` | `second-price`, `first-price`, `all-pay`, `unit-demand`, `gsp`, `gsp-batch` |
//! | `bidders` | `20` | bidders including the learner |
//! | `slots` | `3` | GSP slots |
//! | `adversary` | `stochastic` | `stochastic`, `adaptive-exp3`, `adaptive-winexp` |
//! | `adaptive` | `4` | adaptive adversaries (the rest stay stochastic) |
//! | `opponent-bids` | `uniform(0,1)` | stochastic opponents' bid distribution |
//! | `ctr` | `uniform(0.5,1)` | slot CTR distribution, sorted per round |
//! | `ctr-mode` | `per-round` | `per-round` or `fixed` (drawn once per replication) |
//! | `scores` | `uniform(0,1)` | quality scores, drawn per bidder and round |
//! | `reserve` | `0` | rank-score reserve |
//! | `values` | `iid(uniform(0,1))` | `iid(dist)`, `drift(a,b)`, `constant(x)`, `file(path)` |
//! | `adversary-values` | `uniform(0,1)` | adaptive adversaries' value distribution |
//! | `feedback` | `exact` | `exact`, `noisy(m)`, `bandit-regression(gamma)` |
//! | `epsilon` | `0.01` | grid resolution of the learners and of the regret reference |
//! | `horizon` | `2000` | rounds `T` |
//! | `replications` | `30` | replications `R` |
//! | `seed` | `1` | base seed |
//! | `learners` | `win-only,exp3` | tracked learners; estimator tags or `doubling` |
//! | `market` | `win-only` | estimator of the seat occupant adaptive adversaries face |
//! | `batch-size` | `10` | contests per period (`n` or `lo..hi`) for `gsp-batch` |
//! | `items` | `4` | items for `unit-demand` |
//! | `graph` | `self-loops` | `self-loops`, `cycle`, `complete`, or `a:b,c; b:a` over outcome labels |
//! | `lipschitz` | `0` | `L` for the doubling learner and bound audits |
//! | `delta` | `1` | `Δ°` for bound audits |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bidlab_core::auction::SingleItemFormat;
use bidlab_core::dist::DistSpec;
use bidlab_core::graph::FeedbackGraph;
use bidlab_core::EstimatorKind;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    SingleItem(SingleItemFormat),
    UnitDemand,
    Gsp,
    GspBatch,
}

impl EnvKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::SingleItem(f) => f.tag(),
            Self::UnitDemand => "unit-demand",
            Self::Gsp => "gsp",
            Self::GspBatch => "gsp-batch",
        }
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unit-demand" => Self::UnitDemand,
            "gsp" => Self::Gsp,
            "gsp-batch" => Self::GspBatch,
            other => Self::SingleItem(other.parse().map_err(|_| Error::config(format!("unknown env {other:?}")))?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adversary {
    Stochastic,
    AdaptiveExp3,
    AdaptiveWinExp,
}

impl Adversary {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Stochastic => "stochastic",
            Self::AdaptiveExp3 => "adaptive-exp3",
            Self::AdaptiveWinExp => "adaptive-winexp",
        }
    }
}

impl FromStr for Adversary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "stochastic" => Self::Stochastic,
            "adaptive-exp3" => Self::AdaptiveExp3,
            "adaptive-winexp" => Self::AdaptiveWinExp,
            _ => return Err(Error::config(format!("unknown adversary mode {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValueSpec {
    Iid(DistSpec),
    Drift(f64, f64),
    Constant(f64),
    File(PathBuf),
}

impl fmt::Display for ValueSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Iid(d) => write!(f, "iid({d})"),
            Self::Drift(a, b) => write!(f, "drift({a},{b})"),
            Self::Constant(x) => write!(f, "constant({x})"),
            Self::File(p) => write!(f, "file({})", p.display()),
        }
    }
}

fn call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')
}

fn num(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::config(format!("{s:?} is not a number")))
}

impl FromStr for ValueSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = call(s, "iid") {
            return Ok(Self::Iid(inner.parse()?));
        }
        if let Some(inner) = call(s, "drift") {
            let (a, b) = inner.split_once(',').ok_or_else(|| Error::config("drift takes two values"))?;
            return Ok(Self::Drift(num(a)?, num(b)?));
        }
        if let Some(inner) = call(s, "file") {
            return Ok(Self::File(PathBuf::from(inner.trim())));
        }
        if let Some(inner) = call(s, "constant") {
            return Ok(Self::Constant(num(inner)?));
        }
        Ok(Self::Iid(s.parse()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackMode {
    Exact,
    Noisy(u64),
    BanditRegression(f64),
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact => f.write_str("exact"),
            Self::Noisy(m) => write!(f, "noisy({m})"),
            Self::BanditRegression(g) => write!(f, "bandit-regression({g})"),
        }
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exact" {
            return Ok(Self::Exact);
        }
        if let Some(m) = call(s, "noisy") {
            let m: u64 = m.trim().parse().map_err(|_| Error::config(format!("noisy needs an integer m, got {m:?}")))?;
            if m == 0 {
                return Err(Error::config("noisy(m) needs m ≥ 1"));
            }
            return Ok(Self::Noisy(m));
        }
        if s == "bandit-regression" {
            return Ok(Self::BanditRegression(0.99));
        }
        if let Some(g) = call(s, "bandit-regression") {
            let g = num(g)?;
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::config(format!("decay factor must lie in (0, 1], got {g}")));
            }
            return Ok(Self::BanditRegression(g));
        }
        Err(Error::config(format!("unknown feedback mode {s:?}")))
    }
}

/// A tracked learner: one of the estimator kinds, or the doubling-trick
/// wrapper around the outcome estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerSpec {
    Fixed(EstimatorKind),
    Doubling,
}

impl LearnerSpec {
    pub fn tag(self) -> &'static str {
        match self {
            Self::Fixed(k) => k.tag(),
            Self::Doubling => "doubling",
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "doubling" => Ok(Self::Doubling),
            other => Ok(Self::Fixed(other.parse()?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    SelfLoops,
    Cycle,
    Complete,
    /// `(from, to)` label pairs.
    Edges(Vec<(String, String)>),
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "self-loops" => Self::SelfLoops,
            "cycle" => Self::Cycle,
            "complete" => Self::Complete,
            list => {
                let mut edges = Vec::new();
                for entry in list.split(';').map(str::trim).filter(|e| !e.is_empty()) {
                    let (from, tos) = entry
                        .split_once(':')
                        .ok_or_else(|| Error::config(format!("graph entry {entry:?} must look like label:a,b")))?;
                    for to in tos.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                        edges.push((from.trim().to_string(), to.to_string()));
                    }
                }
                Self::Edges(edges)
            }
        })
    }
}

impl GraphSpec {
    /// Builds the graph over `labels`. For unit-demand outcome sets the
    /// `cycle` shortcut links the items and leaves the last ("none") outcome
    /// isolated.
    pub fn build(&self, labels: &[String]) -> Result<FeedbackGraph> {
        let n = labels.len();
        let index = |l: &str| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::config(format!("graph names unknown outcome {l:?}")))
        };
        let edges: Vec<(usize, usize)> = match self {
            Self::SelfLoops => Vec::new(),
            Self::Complete => (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect(),
            Self::Cycle => {
                let items = if labels.last().is_some_and(|l| l == "none") { n - 1 } else { n };
                (0..items).flat_map(|a| [(a, (a + 1) % items), ((a + 1) % items, a)]).collect()
            }
            Self::Edges(list) => list.iter().map(|(a, b)| Ok((index(a)?, index(b)?))).collect::<Result<_>>()?,
        };
        Ok(FeedbackGraph::new(n, &edges)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchSize {
    pub min: usize,
    pub max: usize,
}

impl FromStr for BatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| Error::config(format!("bad batch size {s:?}")));
        let (min, max) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if min == 0 || min > max {
            return Err(Error::config(format!("batch size range {s:?} must satisfy 1 ≤ lo ≤ hi")));
        }
        Ok(Self { min, max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub env: EnvKind,
    pub bidders: usize,
    pub slots: usize,
    pub adversary: Adversary,
    pub adaptive: usize,
    pub opponent_bids: DistSpec,
    pub ctr: DistSpec,
    pub fixed_ctrs: bool,
    pub scores: DistSpec,
    pub reserve: f64,
    pub values: ValueSpec,
    pub adversary_values: DistSpec,
    pub feedback: FeedbackMode,
    pub epsilon: f64,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub learners: Vec<LearnerSpec>,
    pub market: EstimatorKind,
    pub batch_size: BatchSize,
    pub items: usize,
    pub graph: GraphSpec,
    pub lipschitz: f64,
    pub delta: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            env: EnvKind::Gsp,
            bidders: 20,
            slots: 3,
            adversary: Adversary::Stochastic,
            adaptive: 4,
            opponent_bids: DistSpec::Uniform { lo: 0.0, hi: 1.0 },
            ctr: DistSpec::Uniform { lo: 0.5, hi: 1.0 },
            fixed_ctrs: false,
            scores: DistSpec::Uniform { lo: 0.0, hi: 1.0 },
            reserve: 0.0,
            values: ValueSpec::Iid(DistSpec::Uniform { lo: 0.0, hi: 1.0 }),
            adversary_values: DistSpec::Uniform { lo: 0.0, hi: 1.0 },
            feedback: FeedbackMode::Exact,
            epsilon: 0.01,
            horizon: 2000,
            replications: 30,
            seed: 1,
            learners: vec![LearnerSpec::Fixed(EstimatorKind::WinOnly), LearnerSpec::Fixed(EstimatorKind::Exp3)],
            market: EstimatorKind::WinOnly,
            batch_size: BatchSize { min: 10, max: 10 },
            items: 4,
            graph: GraphSpec::SelfLoops,
            lipschitz: 0.0,
            delta: 1.0,
        }
    }
}

impl ScenarioConfig {
    /// Parses `key = value` text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::config(format!("line {}: {}", lineno + 1, e)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let int = |v: &str| v.parse::<usize>().map_err(|_| Error::config(format!("{key}: {v:?} is not a count")));
        match key {
            "name" => self.name = value.to_string(),
            "env" => self.env = value.parse()?,
            "bidders" => self.bidders = int(value)?,
            "slots" => self.slots = int(value)?,
            "adversary" => self.adversary = value.parse()?,
            "adaptive" => self.adaptive = int(value)?,
            "opponent-bids" => self.opponent_bids = value.parse()?,
            "ctr" => self.ctr = value.parse()?,
            "ctr-mode" => {
                self.fixed_ctrs = match value {
                    "per-round" => false,
                    "fixed" => true,
                    _ => return Err(Error::config(format!("ctr-mode must be per-round or fixed, got {value:?}"))),
                }
            }
            "scores" => self.scores = value.parse()?,
            "reserve" => self.reserve = num(value)?,
            "values" => self.values = value.parse()?,
            "adversary-values" => self.adversary_values = value.parse()?,
            "feedback" => self.feedback = value.parse()?,
            "epsilon" => self.epsilon = num(value)?,
            "horizon" => self.horizon = int(value)?,
            "replications" => self.replications = int(value)?,
            "seed" => {
                self.seed = value.parse().map_err(|_| Error::config(format!("seed: {value:?} is not an integer")))?
            }
            "learners" => {
                self.learners =
                    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect::<Result<_>>()?
            }
            "market" => self.market = value.parse()?,
            "batch-size" => self.batch_size = value.parse()?,
            "items" => self.items = int(value)?,
            "graph" => self.graph = value.parse()?,
            "lipschitz" => self.lipschitz = num(value)?,
            "delta" => self.delta = num(value)?,
            _ => return Err(Error::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if self.horizon == 0 || self.replications == 0 {
            return fail("horizon and replications must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return fail(format!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        if self.learners.is_empty() {
            return fail("at least one learner is required".into());
        }
        if self.bidders < 2 {
            return fail("at least two bidders are required".into());
        }
        if matches!(self.env, EnvKind::Gsp | EnvKind::GspBatch) && !(1..=self.bidders).contains(&self.slots) {
            return fail(format!("need 1 ≤ slots ≤ bidders, got {} slots for {} bidders", self.slots, self.bidders));
        }
        if self.adversary != Adversary::Stochastic {
            if self.env != EnvKind::Gsp {
                return fail("adaptive adversaries are only simulated in the gsp environment".into());
            }
            if self.adaptive == 0 || self.adaptive >= self.bidders {
                return fail(format!("adaptive count must lie in 1..{}", self.bidders));
            }
            if !matches!(self.market, EstimatorKind::WinOnly | EstimatorKind::Outcome | EstimatorKind::Exp3) {
                return fail(format!("market learner {} is not supported", self.market));
            }
        }
        if !(self.reserve >= 0.0) || !(self.lipschitz >= 0.0) || !(self.delta > 0.0 && self.delta <= 1.0) {
            return fail("reserve and lipschitz must be ≥ 0 and delta must lie in (0, 1]".into());
        }
        if self.env == EnvKind::UnitDemand && !(1..=63).contains(&self.items) {
            return fail("unit-demand needs between 1 and 63 items".into());
        }
        if self.feedback != FeedbackMode::Exact && self.env != EnvKind::Gsp {
            return fail("noisy and regression feedback are defined for the gsp environment".into());
        }
        for (i, l) in self.learners.iter().enumerate() {
            self.check_learner(*l)?;
            if self.learners[..i].contains(l) {
                return fail(format!("learner {} is listed twice", l.tag()));
            }
        }
        if let ValueSpec::Drift(a, b) = self.values {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                return fail("drift endpoints must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    fn check_learner(&self, l: LearnerSpec) -> Result<()> {
        use EstimatorKind::*;
        let ok = match (l, self.env) {
            (LearnerSpec::Doubling, EnvKind::SingleItem(_)) => true,
            (LearnerSpec::Doubling, _) => false,
            (LearnerSpec::Fixed(Exp3), _) => true,
            (LearnerSpec::Fixed(WinOnly), EnvKind::SingleItem(f)) => f != SingleItemFormat::AllPay,
            (LearnerSpec::Fixed(Outcome | Graph), EnvKind::SingleItem(_) | EnvKind::UnitDemand | EnvKind::Gsp) => true,
            (LearnerSpec::Fixed(WinOnly), EnvKind::Gsp) => true,
            (LearnerSpec::Fixed(Batch | BatchMean | BatchScaled), EnvKind::GspBatch) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::config(format!("learner {} cannot run in the {} environment", l.tag(), self.env.tag())));
        }
        if self.feedback != FeedbackMode::Exact && matches!(l, LearnerSpec::Fixed(Outcome | Graph)) {
            return Err(Error::config(format!("learner {} needs exact feedback", l.tag())));
        }
        Ok(())
    }

    /// Number of outcomes the environment produces.
    pub fn outcomes(&self) -> usize {
        match self.env {
            EnvKind::UnitDemand => self.items + 1,
            _ => 2,
        }
    }

    pub fn outcome_labels(&self) -> Vec<String> {
        match self.env {
            EnvKind::UnitDemand => (1..=self.items).map(|k| format!("item{k}")).chain(["none".to_string()]).collect(),
            EnvKind::Gsp | EnvKind::GspBatch => vec!["click".into(), "no-click".into()],
            EnvKind::SingleItem(_) => vec!["win".into(), "lose".into()],
        }
    }

    /// Writes the configuration back in file form.
    pub fn to_text(&self) -> String {
        let learners: Vec<&str> = self.learners.iter().map(|l| l.tag()).collect();
        let graph = match &self.graph {
            GraphSpec::SelfLoops => "self-loops".to_string(),
            GraphSpec::Cycle => "cycle".to_string(),
            GraphSpec::Complete => "complete".to_string(),
            GraphSpec::Edges(e) => e.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join("; "),
        };
        let batch = if self.batch_size.min == self.batch_size.max {
            self.batch_size.min.to_string()
        } else {
            format!("{}..{}", self.batch_size.min, self.batch_size.max)
        };
        [
            ("name", self.name.clone()),
            ("env", self.env.tag().to_string()),
            ("bidders", self.bidders.to_string()),
            ("slots", self.slots.to_string()),
            ("adversary", self.adversary.tag().to_string()),
            ("adaptive", self.adaptive.to_string()),
            ("opponent-bids", self.opponent_bids.to_string()),
            ("ctr", self.ctr.to_string()),
            ("ctr-mode", if self.fixed_ctrs { "fixed" } else { "per-round" }.to_string()),
            ("scores", self.scores.to_string()),
            ("reserve", self.reserve.to_string()),
            ("values", self.values.to_string()),
            ("adversary-values", self.adversary_values.to_string()),
            ("feedback", self.feedback.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("horizon", self.horizon.to_string()),
            ("replications", self.replications.to_string()),
            ("seed", self.seed.to_string()),
            ("learners", learners.join(",")),
            ("market", self.market.tag().to_string()),
            ("batch-size", batch),
            ("items", self.items.to_string()),
            ("graph", graph),
            ("lipschitz", self.lipschitz.to_string()),
            ("delta", self.delta.to_string()),
        ]
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
    }
}
