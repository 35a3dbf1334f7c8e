//! The private communication loop: the learner sends θ, an owner computes a
//! subgradient of its loss at θ on its own datum, and only the channel output
//! Z travels back.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::channels::{Channel, PrivacyCertificate};
use crate::error::{Error, Result};
use crate::geometry::Vector;
use crate::losses::{DataDist, LossFn};
use crate::optimizers::GradOracle;
use crate::rng::{derived, Rng};

/// One data owner. The datum has no public accessor: the only way to learn
/// anything about it is through [`DataOwner::respond`].
pub struct DataOwner {
    datum: Vector,
    loss: LossFn,
    channel: Arc<Channel>,
    rng: Rng,
}

impl DataOwner {
    pub fn new(datum: Vector, loss: LossFn, channel: Arc<Channel>, rng: Rng) -> Result<Self> {
        datum.check_dim(channel.dim)?;
        Ok(DataOwner {
            datum,
            loss,
            channel,
            rng,
        })
    }

    /// Subgradient selection happens here, before the channel perturbs it.
    pub fn respond(&mut self, theta: &Vector) -> Result<Vector> {
        let g = self.loss.subgrad(&self.datum, theta)?;
        self.channel.sample(&g, &mut self.rng)
    }

    pub fn certificate(&self) -> PrivacyCertificate {
        self.channel.certificate()
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamMode {
    SinglePass,
    WithReplacement,
}

enum Source {
    Fixed(Vec<DataOwner>),
    /// Every query meets a fresh owner with x ~ P.
    Population {
        data: DataDist,
        loss: LossFn,
        channel: Arc<Channel>,
        rng: Rng,
    },
}

/// The sequence Z₁, Z₂, … seen by the learner.
pub struct PrivateGradStream {
    source: Source,
    mode: StreamMode,
    cursor: usize,
    seed: u64,
    picker: Rng,
}

impl PrivateGradStream {
    /// A stream over a fixed, ordered set of owners.
    pub fn from_owners(owners: Vec<DataOwner>, mode: StreamMode, seed: u64) -> Result<Self> {
        if owners.is_empty() {
            return Err(Error::InvalidParameter(
                "a stream needs at least one owner".into(),
            ));
        }
        Ok(PrivateGradStream {
            source: Source::Fixed(owners),
            mode,
            cursor: 0,
            seed,
            picker: derived(seed, u64::MAX),
        })
    }

    /// Owners holding the given data, each with its own derived RNG stream.
    pub fn from_data(
        data: Vec<Vector>,
        loss: LossFn,
        channel: Arc<Channel>,
        mode: StreamMode,
        seed: u64,
    ) -> Result<Self> {
        let owners = data
            .into_iter()
            .enumerate()
            .map(|(i, x)| DataOwner::new(x, loss, channel.clone(), derived(seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_owners(owners, mode, seed)
    }

    /// i.i.d. owners drawn from a population, without bound on the number of queries.
    pub fn population(
        data: DataDist,
        loss: LossFn,
        channel: Arc<Channel>,
        seed: u64,
    ) -> Result<Self> {
        if data.dim() != channel.dim {
            return Err(Error::DimensionMismatch {
                expected: channel.dim,
                got: data.dim(),
            });
        }
        Ok(PrivateGradStream {
            source: Source::Population {
                data,
                loss,
                channel,
                rng: derived(seed, 0),
            },
            mode: StreamMode::WithReplacement,
            cursor: 0,
            seed,
            picker: derived(seed, u64::MAX),
        })
    }

    pub fn mode(&self) -> StreamMode {
        self.mode
    }

    pub fn queries_answered(&self) -> usize {
        self.cursor
    }

    /// Owners still available to a single-pass stream.
    pub fn remaining(&self) -> Option<usize> {
        match (&self.source, self.mode) {
            (Source::Fixed(owners), StreamMode::SinglePass) => Some(owners.len() - self.cursor),
            _ => None,
        }
    }

    pub fn query(&mut self, theta: &Vector) -> Result<Vector> {
        let z = match &mut self.source {
            Source::Fixed(owners) => {
                let i = match self.mode {
                    StreamMode::SinglePass => {
                        if self.cursor >= owners.len() {
                            return Err(Error::Exhausted(owners.len()));
                        }
                        self.cursor
                    }
                    StreamMode::WithReplacement => {
                        rand::Rng::gen_range(&mut self.picker, 0..owners.len())
                    }
                };
                owners[i].respond(theta)?
            }
            Source::Population {
                data,
                loss,
                channel,
                rng,
            } => {
                let x = data.sample(rng);
                let g = loss.subgrad(&x, theta)?;
                channel.sample(&g, rng)?
            }
        };
        self.cursor += 1;
        Ok(z)
    }

    /// What the learner can possibly have seen, and under which guarantees.
    pub fn audit_leakage(&self) -> LeakageReport {
        let certificates: Vec<PrivacyCertificate> = match &self.source {
            Source::Fixed(owners) => owners.iter().map(DataOwner::certificate).collect(),
            Source::Population { channel, .. } => vec![channel.certificate()],
        };
        let channels: Vec<&Channel> = match &self.source {
            Source::Fixed(owners) => owners.iter().map(DataOwner::channel).collect(),
            Source::Population { channel, .. } => vec![channel.as_ref()],
        };
        let non_private = certificates
            .iter()
            .any(|c| matches!(c, PrivacyCertificate::NonPrivate));
        let mut verified_dp_ratio = None;
        for ch in channels {
            if ch.kind.is_differentially_private() && ch.dim <= 10 {
                if let Ok(r) = ch.max_privacy_ratio() {
                    verified_dp_ratio = Some(verified_dp_ratio.map_or(r, |v: f64| v.max(r)));
                }
            }
        }
        LeakageReport {
            learner_view: "(theta_t, z_t) pairs only".to_string(),
            queries: self.cursor,
            owners: match &self.source {
                Source::Fixed(owners) => Some(owners.len()),
                Source::Population { .. } => None,
            },
            certificates,
            non_private,
            verified_dp_ratio,
        }
    }
}

impl GradOracle for PrivateGradStream {
    fn query(&mut self, theta: &Vector) -> Result<Vector> {
        PrivateGradStream::query(self, theta)
    }

    fn seed(&self) -> Option<u64> {
        Some(self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub learner_view: String,
    pub queries: usize,
    pub owners: Option<usize>,
    /// One entry per owner, or a single entry for a population stream.
    pub certificates: Vec<PrivacyCertificate>,
    pub non_private: bool,
    /// Exhaustive max pmf ratio over the DP channels in use (d ≤ 10).
    pub verified_dp_ratio: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Norm, NormBall};
    use crate::rng::seeded;

    fn cube_data(n: usize, d: usize, seed: u64) -> Vec<Vector> {
        let mut rng = seeded(seed);
        (0..n)
            .map(|_| {
                Vector::new(
                    (0..d)
                        .map(|_| {
                            if rand::Rng::gen::<bool>(&mut rng) {
                                1.0
                            } else {
                                -1.0
                            }
                        })
                        .collect(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn identity_returns_exact_subgradient() {
        let d = 3;
        let ch = Arc::new(Channel::identity(d, NormBall::new(Norm::Linf, 1.0).unwrap()).unwrap());
        let loss = LossFn::median(1.0, 0.5).unwrap();
        let data = cube_data(4, d, 1);
        let theta = Vector::new(vec![0.1, -0.2, 0.0]).unwrap();
        let mut s = PrivateGradStream::from_data(data.clone(), loss, ch, StreamMode::SinglePass, 9)
            .unwrap();
        for x in &data {
            assert_eq!(s.query(&theta).unwrap(), loss.subgrad(x, &theta).unwrap());
        }
        assert_eq!(s.query(&theta), Err(Error::Exhausted(4)));
        let report = s.audit_leakage();
        assert!(report.non_private);
        assert_eq!(report.certificates.len(), 4);
    }

    #[test]
    fn linear_loss_output_ignores_theta() {
        let d = 2;
        let ch = Arc::new(Channel::linf_maxent(d, 1.0, 2.0).unwrap());
        let loss = LossFn::linear(1.0, Norm::Linf).unwrap();
        let data = cube_data(50, d, 3);
        let mut a =
            PrivateGradStream::from_data(data.clone(), loss, ch.clone(), StreamMode::SinglePass, 5)
                .unwrap();
        let mut b =
            PrivateGradStream::from_data(data, loss, ch, StreamMode::SinglePass, 5).unwrap();
        let t1 = Vector::zeros(d);
        let t2 = Vector::new(vec![0.7, -0.3]).unwrap();
        for _ in 0..50 {
            assert_eq!(a.query(&t1).unwrap(), b.query(&t2).unwrap());
        }
    }

    #[test]
    fn dp_audit_verifies_ratio() {
        let ch = Arc::new(Channel::dp_hypercube(3, 1.0, 0.5).unwrap());
        let s = PrivateGradStream::population(
            DataDist::cube_bernoulli(0.2, Vector::filled(3, 1.0)).unwrap(),
            LossFn::median(1.0, 1.0).unwrap(),
            ch,
            1,
        )
        .unwrap();
        let report = s.audit_leakage();
        assert_eq!(
            report.certificates,
            vec![PrivacyCertificate::DifferentialPrivacy { eps: 0.5 }]
        );
        assert!((report.verified_dp_ratio.unwrap() - 0.5f64.exp()).abs() < 1e-10);
        assert!(!report.non_private);
    }
}
