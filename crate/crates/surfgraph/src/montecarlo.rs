//! Seeded sampling of uniform random graphs with a fixed number of edges,
//! rejection sampling of the embeddable ones, and the component statistics
//! measured on each sample.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotics::{classify_regime, RegimePolicy, RegimeTag};
use crate::decompose::decompose;
use crate::genus::{is_planar, GenusError, GenusOracle};
use crate::graph::{ComponentClass, ComponentView, Label, LabeledGraph};

/// Version of the CSV column layout produced by [`write_csv`].
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("m = {m} is not between 0 and C({n}, 2)")]
    BadM { n: u32, m: u64 },
    #[error("no embeddable sample within {tries} tries")]
    Rejected { tries: u64 },
    #[error("genus cap exceeded: {0}")]
    CapExceeded(#[from] GenusError),
    #[error("invalid plan: {0}")]
    BadPlan(String),
}

/// A master seed and a stream; `(master, stream)` fixes every draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    /// Stream for repetition `rep` of grid point `point`.
    pub fn for_sample(master: u64, point: u32, rep: u32) -> Seed {
        Seed {
            master,
            stream: (u64::from(point) << 32) | u64::from(rep),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

fn pair_from_index(k: u64) -> (Label, Label) {
    // colex order: (1,2), (1,3), (2,3), (1,4), …
    let mut v = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0) as u64;
    while v * (v - 1) / 2 > k {
        v -= 1;
    }
    while (v + 1) * v / 2 <= k {
        v += 1;
    }
    let u = k - v * (v - 1) / 2;
    (u as Label + 1, v as Label + 1)
}

/// Uniform graph on `n` labeled vertices with `m` edges.
pub fn sample_gnm(n: u32, m: u64, rng: &mut ChaCha8Rng) -> Result<LabeledGraph, McError> {
    let pairs = u64::from(n) * u64::from(n.saturating_sub(1)) / 2;
    if m > pairs {
        return Err(McError::BadM { n, m });
    }
    let chosen = index::sample(rng, pairs as usize, m as usize);
    let edges: Vec<(Label, Label)> = chosen.into_iter().map(|k| pair_from_index(k as u64)).collect();
    Ok(LabeledGraph::new(n, edges).expect("distinct pairs"))
}

/// Whether `g` embeds on the surface of genus `genus`. Above genus 0 the
/// question is decided on the kernel, which has the same genus as the graph.
pub fn embeddable_via_kernel(g: &LabeledGraph, genus: u32, oracle: &GenusOracle) -> Result<bool, McError> {
    if is_planar(g) {
        return Ok(true);
    }
    if genus == 0 {
        return Ok(false);
    }
    let kernel = decompose(g).kernel.graph;
    Ok(oracle.embeddable(&kernel, genus)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Accepted {
    pub graph: LabeledGraph,
    pub tries: u64,
}

/// Draws until an embeddable graph appears, giving a uniform element of the
/// embeddable class conditioned on acceptance.
pub fn sample_surface(
    n: u32,
    m: u64,
    genus: u32,
    rng: &mut ChaCha8Rng,
    max_tries: u64,
    oracle: &GenusOracle,
) -> Result<Accepted, McError> {
    for tries in 1..=max_tries {
        let graph = sample_gnm(n, m, rng)?;
        if embeddable_via_kernel(&graph, genus, oracle)? {
            return Ok(Accepted { graph, tries });
        }
    }
    Err(McError::Rejected { tries: max_tries })
}

/// Extra quantities for [`measure`] that need the genus machinery.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasureOptions {
    /// Planarity of the graph outside the largest component.
    pub rest_planarity: bool,
    /// Genus of the largest component (subject to the genus cap).
    pub largest_genus: bool,
}

/// One sample. Measured fields are empty for rejected samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: u32,
    pub m: u64,
    pub g: u32,
    pub regime: Option<RegimeTag>,
    pub lambda: f64,
    pub zeta: f64,
    pub sample: u32,
    pub accepted: bool,
    pub tries: u64,
    pub h1: Option<u64>,
    pub h2: Option<u64>,
    pub h3: Option<u64>,
    pub h1_class: Option<ComponentClass>,
    pub h2_class: Option<ComponentClass>,
    pub trees: Option<u64>,
    pub unicyclic: Option<u64>,
    pub complex: Option<u64>,
    pub n_complex: Option<u64>,
    pub n_noncomplex: Option<u64>,
    pub m_noncomplex: Option<u64>,
    pub n_core: Option<u64>,
    pub n_kernel: Option<u64>,
    pub excess: Option<u64>,
    pub deficiency: Option<u64>,
    pub rest_planar: Option<bool>,
    pub h1_genus: Option<u32>,
}

impl ExperimentRecord {
    fn empty(n: u32, m: u64, g: u32) -> Self {
        let regime = classify_regime(u64::from(n).max(1), m, g, &RegimePolicy::default()).ok();
        ExperimentRecord {
            n,
            m,
            g,
            regime: regime.as_ref().map(|r| r.tag),
            lambda: regime.as_ref().map_or(f64::NAN, |r| r.lambda),
            zeta: regime.as_ref().map_or(f64::NAN, |r| r.zeta),
            sample: 0,
            accepted: false,
            tries: 0,
            h1: None,
            h2: None,
            h3: None,
            h1_class: None,
            h2_class: None,
            trees: None,
            unicyclic: None,
            complex: None,
            n_complex: None,
            n_noncomplex: None,
            m_noncomplex: None,
            n_core: None,
            n_kernel: None,
            excess: None,
            deficiency: None,
            rest_planar: None,
            h1_genus: None,
        }
    }

    pub fn has_complex(&self) -> Option<bool> {
        self.complex.map(|c| c > 0)
    }
}

/// Component sizes, classes and decomposition counts of `graph`.
pub fn measure(
    graph: &LabeledGraph,
    g: u32,
    options: MeasureOptions,
    oracle: &GenusOracle,
) -> Result<ExperimentRecord, McError> {
    let view = ComponentView::of_graph(graph);
    let counts = decompose(graph).counts;
    let mut rec = ExperimentRecord::empty(graph.vertex_count(), graph.edge_count() as u64, g);
    rec.accepted = true;
    let comps = &view.components;
    let order = |i: usize| comps.get(i).map(|c| c.order() as u64);
    rec.h1 = order(0);
    rec.h2 = order(1);
    rec.h3 = order(2);
    rec.h1_class = comps.first().map(|c| c.class);
    rec.h2_class = comps.get(1).map(|c| c.class);
    let count = |class| comps.iter().filter(|c| c.class == class).count() as u64;
    rec.trees = Some(count(ComponentClass::Tree));
    rec.unicyclic = Some(count(ComponentClass::Unicyclic));
    rec.complex = Some(count(ComponentClass::Complex));
    rec.n_complex = Some(counts.n_complex);
    rec.n_noncomplex = Some(counts.n_noncomplex);
    rec.m_noncomplex = Some(counts.m_noncomplex);
    rec.n_core = Some(counts.n_core);
    rec.n_kernel = Some(counts.n_kernel);
    rec.excess = Some(counts.excess);
    rec.deficiency = Some(counts.deficiency);
    if let Some(largest) = comps.first() {
        if options.rest_planarity {
            let mut inside = vec![false; graph.vertex_count() as usize + 1];
            for &v in &largest.vertices {
                inside[v as usize] = true;
            }
            let rest: Vec<Label> = (1..=graph.vertex_count()).filter(|&v| !inside[v as usize]).collect();
            rec.rest_planar = Some(is_planar(&graph.induced(&rest).graph));
        }
        if options.largest_genus {
            let part = graph.induced(&largest.vertices);
            rec.h1_genus = Some(oracle.genus(&part.graph.to_multigraph())?);
        }
    }
    Ok(rec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    /// Uniform graphs with `m` edges.
    Er,
    /// Uniform graphs with `m` edges embeddable on the surface of genus `g`.
    Surface { g: u32, max_tries: u64 },
}

impl Model {
    fn genus(&self) -> u32 {
        match self {
            Model::Er => 0,
            Model::Surface { g, .. } => *g,
        }
    }
}

/// A grid point; the edge count is given directly or through exactly one of
/// `lambda`, `zeta` or `alpha`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepPoint {
    pub n: u32,
    pub m: Option<u64>,
    pub lambda: Option<f64>,
    pub zeta: Option<f64>,
    pub alpha: Option<f64>,
}

impl SweepPoint {
    pub fn edges(&self) -> Result<u64, McError> {
        let nf = f64::from(self.n);
        let given = [self.m.is_some(), self.lambda.is_some(), self.zeta.is_some(), self.alpha.is_some()];
        if given.iter().filter(|&&b| b).count() != 1 {
            return Err(McError::BadPlan(format!(
                "point with n = {} needs exactly one of m, lambda, zeta, alpha",
                self.n
            )));
        }
        let alpha = if let Some(m) = self.m {
            return Ok(m);
        } else if let Some(l) = self.lambda {
            1.0 + l * nf.powf(-1.0 / 3.0)
        } else if let Some(z) = self.zeta {
            2.0 + z * nf.powf(-0.4)
        } else {
            self.alpha.unwrap_or_default()
        };
        let m = alpha * nf / 2.0;
        if !(m >= 0.0) {
            return Err(McError::BadPlan(format!("negative edge count at n = {}", self.n)));
        }
        Ok(m.round() as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub model: Model,
    pub points: Vec<SweepPoint>,
    #[serde(default)]
    pub options: MeasureOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub n: u32,
    pub m: u64,
    pub regime: Option<RegimeTag>,
    pub reps: u32,
    pub accepted: u32,
    pub total_tries: u64,
    /// Accepted samples per draw.
    pub acceptance_rate: f64,
    pub h1_q10: Option<f64>,
    pub h1_median: Option<f64>,
    pub h1_q90: Option<f64>,
    pub h1_complex_fraction: Option<f64>,
    pub complex_present_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<ExperimentRecord>,
    pub summaries: Vec<PointSummary>,
}

/// Draws and measures one sample of `model` at `(n, m)`.
pub fn run_sample(
    model: Model,
    n: u32,
    m: u64,
    seed: Seed,
    options: MeasureOptions,
    oracle: &GenusOracle,
) -> Result<ExperimentRecord, McError> {
    let mut rng = seed.rng();
    let g = model.genus();
    let (graph, tries) = match model {
        Model::Er => (sample_gnm(n, m, &mut rng)?, 1),
        Model::Surface { g, max_tries } => match sample_surface(n, m, g, &mut rng, max_tries, oracle) {
            Ok(a) => (a.graph, a.tries),
            Err(McError::Rejected { tries }) => {
                let mut rec = ExperimentRecord::empty(n, m, g);
                rec.tries = tries;
                return Ok(rec);
            }
            Err(e) => return Err(e),
        },
    };
    let mut rec = measure(&graph, g, options, oracle)?;
    rec.tries = tries;
    Ok(rec)
}

/// `reps` samples per grid point; records come out sorted by (point, sample)
/// whatever the number of worker threads.
pub fn sweep(plan: &SweepPlan, reps: u32, master_seed: u64, oracle: &GenusOracle) -> Result<SweepResult, McError> {
    let resolved: Vec<(u32, u64)> = plan
        .points
        .iter()
        .map(|p| p.edges().map(|m| (p.n, m)))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(u32, u32)> = (0..resolved.len() as u32)
        .flat_map(|p| (0..reps).map(move |r| (p, r)))
        .collect();
    let records: Vec<ExperimentRecord> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let (n, m) = resolved[p as usize];
            let seed = Seed::for_sample(master_seed, p, r);
            run_sample(plan.model, n, m, seed, plan.options, oracle).map(|mut rec| {
                rec.sample = r;
                rec
            })
        })
        .collect::<Result<_, _>>()?;
    let summaries = resolved
        .iter()
        .enumerate()
        .map(|(i, &(n, m))| summarize(n, m, &records[i * reps as usize..(i + 1) * reps as usize]))
        .collect();
    Ok(SweepResult { records, summaries })
}

fn summarize(n: u32, m: u64, records: &[ExperimentRecord]) -> PointSummary {
    let accepted: Vec<&ExperimentRecord> = records.iter().filter(|r| r.accepted).collect();
    let mut h1: Vec<f64> = accepted.iter().filter_map(|r| r.h1).map(|x| x as f64).collect();
    h1.sort_by(f64::total_cmp);
    let total_tries: u64 = records.iter().map(|r| r.tries).sum();
    let frac = |pred: &dyn Fn(&ExperimentRecord) -> bool| {
        (!accepted.is_empty()).then(|| accepted.iter().filter(|r| pred(r)).count() as f64 / accepted.len() as f64)
    };
    PointSummary {
        n,
        m,
        regime: records.first().and_then(|r| r.regime),
        reps: records.len() as u32,
        accepted: accepted.len() as u32,
        total_tries,
        acceptance_rate: if total_tries == 0 {
            0.0
        } else {
            accepted.len() as f64 / total_tries as f64
        },
        h1_q10: quantile(&h1, 0.1),
        h1_median: quantile(&h1, 0.5),
        h1_q90: quantile(&h1, 0.9),
        h1_complex_fraction: frac(&|r| r.h1_class == Some(ComponentClass::Complex)),
        complex_present_fraction: frac(&|r| r.has_complex() == Some(true)),
    }
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos - pos.floor());
    let next = sorted[(i + 1).min(sorted.len() - 1)];
    Some(sorted[i] + frac * (next - sorted[i]))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn power_law_exponent(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn write_csv<W: std::io::Write>(records: &[ExperimentRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusEstimate {
    pub successes: u64,
    pub trials: u64,
    /// Samples rejected by the surface model, excluded from `trials`.
    pub rejected: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Wilson score interval at the normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Fraction of samples satisfying `predicate`, with a 95% Wilson interval.
pub fn census_probability(
    model: Model,
    n: u32,
    m: u64,
    predicate: &(dyn Fn(&ExperimentRecord) -> bool + Sync),
    reps: u32,
    master_seed: u64,
    oracle: &GenusOracle,
) -> Result<CensusEstimate, McError> {
    let outcomes: Vec<Option<bool>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rec = run_sample(model, n, m, Seed::for_sample(master_seed, 0, r), MeasureOptions::default(), oracle)?;
            Ok(rec.accepted.then(|| predicate(&rec)))
        })
        .collect::<Result<_, McError>>()?;
    let trials = outcomes.iter().filter(|o| o.is_some()).count() as u64;
    let successes = outcomes.iter().filter(|o| **o == Some(true)).count() as u64;
    let (lower, upper) = wilson_interval(successes, trials, Z_95);
    Ok(CensusEstimate {
        successes,
        trials,
        rejected: reps as u64 - trials,
        estimate: if trials == 0 { f64::NAN } else { successes as f64 / trials as f64 },
        lower,
        upper,
    })
}
