use serde::{Deserialize, Serialize};

use super::{is_upper, log2_exact, partner};
use crate::error::{Error, Result};

/// Frozen/data channel layout for `N` workers.
///
/// Immutable once built; safe to share across threads and decoding sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConstructionDoc", into = "ConstructionDoc")]
pub struct CodeConstruction {
    n_workers: usize,
    epsilon: f64,
    channel_probs: Vec<f64>,
    frozen: Vec<bool>,
    frozen_set: Vec<usize>,
    data_set: Vec<usize>,
}

/// JSON shape of a construction: `{n_workers, epsilon, n_data, frozen_set, channel_probs}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstructionDoc {
    pub n_workers: usize,
    pub epsilon: f64,
    pub n_data: usize,
    pub frozen_set: Vec<usize>,
    pub channel_probs: Vec<f64>,
}

impl CodeConstruction {
    /// Builds the construction for `n_workers` channels of erasure probability
    /// `epsilon`, keeping the `n_data` most reliable synthesized channels for data.
    pub fn new(n_workers: usize, epsilon: f64, n_data: usize) -> Result<Self> {
        let probs = compute_channel_erasure_probs(n_workers, epsilon)?;
        let mut c = select_frozen_set(&probs, n_data)?;
        c.epsilon = epsilon;
        Ok(c)
    }

    /// Rate `1 - epsilon`: `n_data = round(N * (1 - epsilon))`.
    pub fn from_rate(n_workers: usize, epsilon: f64) -> Result<Self> {
        validate_epsilon(epsilon)?;
        let n_data = (n_workers as f64 * (1.0 - epsilon)).round() as usize;
        if n_data == 0 || n_data >= n_workers {
            return Err(Error::Validation(format!(
                "epsilon {epsilon} leaves {n_data} data channels out of {n_workers}"
            )));
        }
        Self::new(n_workers, epsilon, n_data)
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    pub fn levels(&self) -> u32 {
        self.n_workers.trailing_zeros()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_data(&self) -> usize {
        self.data_set.len()
    }

    pub fn channel_probs(&self) -> &[f64] {
        &self.channel_probs
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn data_set(&self) -> &[usize] {
        &self.data_set
    }

    pub fn is_frozen(&self, channel: usize) -> bool {
        self.frozen[channel]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl From<CodeConstruction> for ConstructionDoc {
    fn from(c: CodeConstruction) -> Self {
        ConstructionDoc {
            n_workers: c.n_workers,
            epsilon: c.epsilon,
            n_data: c.data_set.len(),
            frozen_set: c.frozen_set,
            channel_probs: c.channel_probs,
        }
    }
}

impl TryFrom<ConstructionDoc> for CodeConstruction {
    type Error = Error;

    fn try_from(doc: ConstructionDoc) -> Result<Self> {
        let n = doc.n_workers;
        log2_exact(n)?;
        validate_epsilon(doc.epsilon)?;
        if doc.channel_probs.len() != n {
            return Err(Error::Validation(format!(
                "{} channel probabilities for {n} workers",
                doc.channel_probs.len()
            )));
        }
        if doc.channel_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Validation("channel probability outside [0, 1]".into()));
        }
        let mut frozen = vec![false; n];
        for &f in &doc.frozen_set {
            if f >= n || std::mem::replace(&mut frozen[f], true) {
                return Err(Error::Validation(format!("bad frozen index {f}")));
            }
        }
        let c = CodeConstruction::from_mask(doc.epsilon, doc.channel_probs, frozen);
        if c.n_data() != doc.n_data || c.n_data() == 0 || c.n_data() == n {
            return Err(Error::Validation(format!(
                "n_data {} inconsistent with {} frozen of {n}",
                doc.n_data,
                c.frozen_set.len()
            )));
        }
        Ok(c)
    }
}

impl CodeConstruction {
    fn from_mask(epsilon: f64, channel_probs: Vec<f64>, frozen: Vec<bool>) -> Self {
        let frozen_set = (0..frozen.len()).filter(|&i| frozen[i]).collect();
        let data_set = (0..frozen.len()).filter(|&i| !frozen[i]).collect();
        CodeConstruction {
            n_workers: frozen.len(),
            epsilon,
            channel_probs,
            frozen,
            frozen_set,
            data_set,
        }
    }
}

fn validate_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// Erasure probability of every synthesized input channel, in circuit row order.
///
/// Runs the pairwise transform from the worker level back to the input level:
/// an upper node needs both of its children (`1 - (1-a)(1-b)`), a lower node
/// needs either one (`a * b`).
pub fn compute_channel_erasure_probs(n_workers: usize, epsilon: f64) -> Result<Vec<f64>> {
    let levels = log2_exact(n_workers)?;
    validate_epsilon(epsilon)?;
    let mut probs = vec![epsilon; n_workers];
    for level in (0..levels).rev() {
        for i in (0..n_workers).filter(|&i| is_upper(i, level)) {
            let p = partner(i, level);
            let (a, b) = (probs[i], probs[p]);
            probs[i] = 1.0 - (1.0 - a) * (1.0 - b);
            probs[p] = a * b;
        }
    }
    Ok(probs)
}

/// Keeps the `n_data` lowest-probability channels for data and freezes the rest.
///
/// Ties freeze the lower index. `epsilon` is recovered as the mean channel
/// probability, which the transform conserves.
pub fn select_frozen_set(channel_probs: &[f64], n_data: usize) -> Result<CodeConstruction> {
    let n = channel_probs.len();
    log2_exact(n)?;
    if n_data == 0 || n_data >= n {
        return Err(Error::Validation(format!(
            "n_data must lie in 1..{n}, got {n_data}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        channel_probs[a]
            .total_cmp(&channel_probs[b])
            .then(b.cmp(&a))
    });
    let mut frozen = vec![true; n];
    for &i in &order[..n_data] {
        frozen[i] = false;
    }
    let epsilon = channel_probs.iter().sum::<f64>() / n as f64;
    Ok(CodeConstruction::from_mask(epsilon, channel_probs.to_vec(), frozen))
}
