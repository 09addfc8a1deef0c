use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::{above, below, MixtureDensity, Repr};
use crate::error::{Error, Result};
use crate::quad::{Abscissa, Segment};
use crate::specfun::beta;

const MIN_ACCEPTANCE: f64 = 1e-4;
const GRID: usize = 512;
/// head-room on grid maxima of the reduced density
const SUP_MARGIN: f64 = 1.05;

#[derive(Debug, Clone)]
struct Piece {
    seg: Segment,
    envelope: Beta<f64>,
    sup: f64,
}

/// Rejection sampler drawing the AR(1) coefficient from a mixture density.
///
/// Each support piece `[lo, hi]` with endpoint exponents `(α, β)` gets a
/// scaled Beta(α+1, β+1) proposal; a proposal is accepted with probability
/// `r(x) / sup r`, where `r = φ / ((x−lo)^α (hi−x)^β)`.
#[derive(Debug, Clone)]
pub struct CoefficientSampler {
    density: MixtureDensity,
    pieces: Vec<Piece>,
    choose: WeightedIndex<f64>,
    acceptance: f64,
}

impl CoefficientSampler {
    pub fn new(density: &MixtureDensity) -> Result<Self> {
        let segs: Vec<Segment> = match &density.repr {
            Repr::Tabulated(t) => t
                .lobes()
                .iter()
                .map(|l| Segment::new(l.lo, l.hi, l.exp_lo, l.exp_hi))
                .collect(),
            _ => density.segments(),
        };
        let mut pieces = Vec::with_capacity(segs.len());
        let mut weights = Vec::with_capacity(segs.len());
        for seg in segs {
            let sup = match &density.repr {
                Repr::Tabulated(t) => t
                    .lobes()
                    .iter()
                    .find(|l| l.lo == seg.lo && l.hi == seg.hi)
                    .map(|l| l.reduced.iter().cloned().fold(0.0, f64::max))
                    .unwrap_or(0.0),
                Repr::Uniform { a, b } => 1.0 / (b - a),
                _ => grid_sup(density, &seg) * SUP_MARGIN,
            };
            if !sup.is_finite() {
                return Err(Error::Invalid(format!(
                    "reduced density is unbounded on [{}, {}]; exponents understate the singularity",
                    seg.lo, seg.hi
                )));
            }
            if sup == 0.0 {
                continue;
            }
            let mass = seg.width().powf(seg.exp_lo + seg.exp_hi + 1.0)
                * beta(seg.exp_lo + 1.0, seg.exp_hi + 1.0)?;
            let envelope = Beta::new(seg.exp_lo + 1.0, seg.exp_hi + 1.0)
                .map_err(|e| Error::Invalid(format!("beta envelope: {e}")))?;
            weights.push(sup * mass);
            pieces.push(Piece { seg, envelope, sup });
        }
        let total: f64 = weights.iter().sum();
        let acceptance = 1.0 / total;
        if !(acceptance >= MIN_ACCEPTANCE) {
            return Err(Error::RejectionBudget {
                rate: acceptance,
                minimum: MIN_ACCEPTANCE,
            });
        }
        let choose = WeightedIndex::new(&weights)
            .map_err(|e| Error::Invalid(format!("segment weights: {e}")))?;
        Ok(CoefficientSampler {
            density: density.clone(),
            pieces,
            choose,
            acceptance,
        })
    }

    /// Expected fraction of proposals accepted.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let piece = &self.pieces[self.choose.sample(rng)];
            let u = piece.envelope.sample(rng);
            let seg = &piece.seg;
            let x = seg.lo + seg.width() * u;
            if !(x > seg.lo && x < seg.hi && x.abs() < 1.0) {
                continue;
            }
            let r = reduced(&self.density, seg, Abscissa::new(x));
            if rng.random::<f64>() * piece.sup < r {
                return x;
            }
        }
    }
}

fn reduced(density: &MixtureDensity, seg: &Segment, p: Abscissa) -> f64 {
    let mut w = 1.0;
    if seg.exp_lo != 0.0 {
        w *= above(p, seg.lo).powf(seg.exp_lo);
    }
    if seg.exp_hi != 0.0 {
        w *= below(p, seg.hi).powf(seg.exp_hi);
    }
    density.density_at(p) / w
}

fn grid_sup(density: &MixtureDensity, seg: &Segment) -> f64 {
    let width = seg.width();
    let mut sup: f64 = 0.0;
    // Chebyshev-like clustering toward both ends, plus points very close to them
    for i in 0..=GRID {
        let theta = std::f64::consts::PI * i as f64 / GRID as f64;
        let s = (0.5 * (1.0 - theta.cos())).clamp(1e-12, 1.0 - 1e-12);
        let p = if seg.hi == 1.0 && s > 0.5 {
            Abscissa::below_one(width * (1.0 - s))
        } else if seg.lo == -1.0 && s < 0.5 {
            Abscissa::above_minus_one(width * s)
        } else {
            Abscissa::new(seg.lo + width * s)
        };
        let r = reduced(density, seg, p);
        if r.is_nan() {
            continue;
        }
        sup = sup.max(r);
    }
    sup
}
