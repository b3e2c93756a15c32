//! The composite pretraining objective.
//!
//! Every loss is available twice: as a plain function over values, and as a
//! tape node (`*_node`) whose value and gradient come from the same code, so
//! the two never drift apart.

use std::fmt;
use std::str::FromStr;

use pretext_forge_autograd::{Scalar, Tape, Tensor, Var};

use crate::colorspace::AbImage;
use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-7;

/// Which generator objective to use against the discriminator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GanMode {
    /// `-mean ln D(fake)`.
    #[default]
    NonSaturating,
    /// `mean ln(1 - D(fake))`, the term exactly as it appears in the value function.
    Saturating,
}

impl FromStr for GanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non-saturating" => Ok(GanMode::NonSaturating),
            "saturating" => Ok(GanMode::Saturating),
            _ => Err(Error::Config(format!("unknown gan mode `{s}`"))),
        }
    }
}

impl fmt::Display for GanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GanMode::NonSaturating => "non-saturating",
            GanMode::Saturating => "saturating",
        })
    }
}

/// `alpha` scales the L1 term; `gamma` weights (color, rotation, puzzle, categ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub gamma: [f64; 4],
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 100.0,
            gamma: [0.25; 4],
        }
    }
}

impl LossWeights {
    pub fn new(alpha: f64, gamma: [f64; 4]) -> Result<Self> {
        let w = Self { alpha, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.alpha) || !self.gamma.iter().all(|&g| ok(g)) {
            return Err(Error::Config(format!(
                "loss weights must be finite and nonnegative: alpha={} gamma={:?}",
                self.alpha, self.gamma
            )));
        }
        Ok(())
    }

    /// Self-supervised tasks only.
    pub fn self_supervised(&self) -> Self {
        Self {
            gamma: [self.gamma[0], self.gamma[1], self.gamma[2], 0.0],
            ..*self
        }
    }

    /// Category task only.
    pub fn supervised(&self) -> Self {
        Self {
            gamma: [0.0, 0.0, 0.0, self.gamma[3]],
            ..*self
        }
    }
}

fn clamp_prob<T: Scalar>(p: T) -> T {
    let eps = T::lit(PROB_EPS);
    p.max(eps).min(T::one() - eps)
}

/// `-ln softmax(logits)[target]` and its gradient wrt the logits.
pub fn cross_entropy_single<T: Scalar>(logits: &[T], target: usize) -> Result<(T, Vec<T>)> {
    if target >= logits.len() {
        return Err(Error::InvalidTarget {
            index: target,
            classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let z: T = pretext_forge_autograd::scalar::sum(&exps);
    let loss = z.ln() - (logits[target] - max);
    let mut grad: Vec<T> = exps.into_iter().map(|e| e / z).collect();
    grad[target] = grad[target] - T::one();
    Ok((loss.max(T::zero()), grad))
}

/// Mean cross-entropy over a batch of logit vectors.
pub fn cross_entropy<T: Scalar, L: AsRef<[T]>>(logits: &[L], targets: &[usize]) -> Result<T> {
    if logits.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} targets",
            logits.len(),
            targets.len()
        )));
    }
    if logits.is_empty() {
        return Err(Error::EmptyInput("cross_entropy batch".into()));
    }
    let mut acc = T::zero();
    for (l, &t) in logits.iter().zip(targets) {
        if l.as_ref().len() < 2 {
            return Err(Error::Shape(
                "cross_entropy needs at least 2 classes".into(),
            ));
        }
        acc = acc + cross_entropy_single(l.as_ref(), t)?.0;
    }
    Ok(acc / T::lit(logits.len() as f64))
}

fn check_pair<T>(a: &[T], b: &[T], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "{what}: {} vs {} elements",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput(what.into()));
    }
    Ok(())
}

/// `mean_i [ln d_real_i + ln(1 - d_fake_i)]` with clamped probabilities.
pub fn cgan_value<T: Scalar>(d_real: &[T], d_fake: &[T]) -> Result<T> {
    check_pair(d_real, d_fake, "cgan_value")?;
    let n = T::lit(d_real.len() as f64);
    let real: T = d_real.iter().map(|&p| clamp_prob(p).ln()).sum();
    let fake: T = d_fake
        .iter()
        .map(|&p| (T::one() - clamp_prob(p)).ln())
        .sum();
    Ok((real + fake) / n)
}

/// The discriminator minimizes the negated value function.
pub fn discriminator_loss<T: Scalar>(d_real: &[T], d_fake: &[T]) -> Result<T> {
    Ok(-cgan_value(d_real, d_fake)?)
}

/// Adversarial loss seen by the generator.
pub fn generator_adv_loss<T: Scalar>(d_fake: &[T], mode: GanMode) -> Result<T> {
    if d_fake.is_empty() {
        return Err(Error::EmptyInput("generator_adv_loss".into()));
    }
    let n = T::lit(d_fake.len() as f64);
    let s: T = match mode {
        GanMode::NonSaturating => d_fake.iter().map(|&p| -clamp_prob(p).ln()).sum(),
        GanMode::Saturating => d_fake
            .iter()
            .map(|&p| (T::one() - clamp_prob(p)).ln())
            .sum(),
    };
    Ok(s / n)
}

/// Mean absolute difference.
pub fn l1_mean<T: Scalar>(pred: &[T], target: &[T]) -> Result<T> {
    check_pair(pred, target, "l1")?;
    let s: T = pred.iter().zip(target).map(|(&p, &t)| (p - t).abs()).sum();
    Ok(s / T::lit(pred.len() as f64))
}

/// Mean absolute difference over every pixel and both chroma channels of a
/// batch of ab maps.
pub fn l1_ab<T: Scalar>(pred: &[AbImage<T>], target: &[AbImage<T>]) -> Result<T> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            target.len()
        )));
    }
    let mut p = Vec::new();
    let mut t = Vec::new();
    for (a, b) in pred.iter().zip(target) {
        if !a.same_shape(b) {
            return Err(Error::Shape(format!(
                "ab maps {}x{} vs {}x{}",
                a.width, a.height, b.width, b.height
            )));
        }
        p.extend_from_slice(&a.data);
        t.extend_from_slice(&b.data);
    }
    l1_mean(&p, &t)
}

/// `cgan_term + alpha * l1`.
pub fn color_loss<T: Scalar>(cgan_term: T, l1: T, w: &LossWeights) -> T {
    cgan_term + T::lit(w.alpha) * l1
}

/// `sum_k gamma_k * L_k` over (color, rotation, puzzle, categ).
pub fn total_loss<T: Scalar>(color: T, rotation: T, puzzle: T, categ: T, w: &LossWeights) -> T {
    let g = w.gamma.map(T::lit);
    g[0] * color + g[1] * rotation + g[2] * puzzle + g[3] * categ
}

/// Cross-entropy of a single logit vector, as a tape node.
pub fn cross_entropy_node<T: Scalar>(
    tape: &mut Tape<T>,
    logits: Var,
    target: usize,
) -> Result<Var> {
    let (v, g) = cross_entropy_single(tape.value(logits).data(), target)?;
    Ok(tape.custom_scalar(logits, v, g)?)
}

/// Mean cross-entropy over per-sample logit nodes.
pub fn batch_cross_entropy_node<T: Scalar>(
    tape: &mut Tape<T>,
    logits: &[Var],
    targets: &[usize],
) -> Result<Var> {
    if logits.len() != targets.len() || logits.is_empty() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} targets",
            logits.len(),
            targets.len()
        )));
    }
    let k = T::lit(1.0 / logits.len() as f64);
    let terms = logits
        .iter()
        .zip(targets)
        .map(|(&l, &t)| Ok((cross_entropy_node(tape, l, t)?, k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(tape.weighted_sum(&terms)?)
}

/// `mean ln p` (or `mean ln(1 - p)` when `complement`) over a vector of
/// probabilities. Clamped entries get zero gradient.
fn mean_log_node<T: Scalar>(tape: &mut Tape<T>, p: Var, complement: bool) -> Result<Var> {
    let eps = T::lit(PROB_EPS);
    let data = tape.value(p).data();
    if data.is_empty() {
        return Err(Error::EmptyInput("probability vector".into()));
    }
    let n = T::lit(data.len() as f64);
    let mut value = T::zero();
    let mut grad = Vec::with_capacity(data.len());
    for &x in data {
        let c = clamp_prob(x);
        let inside = x >= eps && x <= T::one() - eps;
        let (v, d) = if complement {
            ((T::one() - c).ln(), -T::one() / (T::one() - c))
        } else {
            (c.ln(), T::one() / c)
        };
        value = value + v;
        grad.push(if inside { d / n } else { T::zero() });
    }
    Ok(tape.custom_scalar(p, value / n, grad)?)
}

/// Value function over discriminator outputs for real and fake pairs.
pub fn cgan_value_node<T: Scalar>(tape: &mut Tape<T>, d_real: Var, d_fake: Var) -> Result<Var> {
    if tape.value(d_real).len() != tape.value(d_fake).len() {
        return Err(Error::Shape(
            "cgan_value: real/fake batch sizes differ".into(),
        ));
    }
    let r = mean_log_node(tape, d_real, false)?;
    let f = mean_log_node(tape, d_fake, true)?;
    Ok(tape.weighted_sum(&[(r, T::one()), (f, T::one())])?)
}

pub fn discriminator_loss_node<T: Scalar>(
    tape: &mut Tape<T>,
    d_real: Var,
    d_fake: Var,
) -> Result<Var> {
    let v = cgan_value_node(tape, d_real, d_fake)?;
    Ok(tape.scale(v, -T::one()))
}

pub fn generator_adv_node<T: Scalar>(
    tape: &mut Tape<T>,
    d_fake: Var,
    mode: GanMode,
) -> Result<Var> {
    Ok(match mode {
        GanMode::NonSaturating => {
            let v = mean_log_node(tape, d_fake, false)?;
            tape.scale(v, -T::one())
        }
        GanMode::Saturating => mean_log_node(tape, d_fake, true)?,
    })
}

/// Mean absolute difference against a constant target. The subgradient at
/// equality is zero.
pub fn l1_node<T: Scalar>(tape: &mut Tape<T>, pred: Var, target: &Tensor<T>) -> Result<Var> {
    let p = tape.value(pred).data();
    let t = target.data();
    let value = l1_mean(p, t)?;
    let n = T::lit(p.len() as f64);
    let grad = p
        .iter()
        .zip(t)
        .map(|(&a, &b)| {
            if a > b {
                T::one() / n
            } else if a < b {
                -T::one() / n
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(tape.custom_scalar(pred, value, grad)?)
}

/// Per-step loss values, stored in double precision regardless of the
/// training scalar.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossReport {
    pub color: f64,
    pub rotation: f64,
    pub puzzle: f64,
    pub categ: f64,
    /// Generator-side adversarial term entering `color`.
    pub cgan: f64,
    pub l1: f64,
    /// Discriminator loss of the step's discriminator update.
    pub disc: f64,
    pub total: f64,
    pub batch_size: usize,
}

impl LossReport {
    /// Builds a report whose `total` is recomputed from the components.
    pub fn new(
        components: [f64; 4],
        cgan: f64,
        l1: f64,
        disc: f64,
        weights: &LossWeights,
        batch_size: usize,
    ) -> Self {
        let [color, rotation, puzzle, categ] = components;
        Self {
            color,
            rotation,
            puzzle,
            categ,
            cgan,
            l1,
            disc,
            total: total_loss(color, rotation, puzzle, categ, weights),
            batch_size,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.color,
            self.rotation,
            self.puzzle,
            self.categ,
            self.cgan,
            self.l1,
            self.disc,
            self.total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    fn fields(&self) -> [(&'static str, f64); 8] {
        [
            ("color", self.color),
            ("rotation", self.rotation),
            ("puzzle", self.puzzle),
            ("categ", self.categ),
            ("cgan", self.cgan),
            ("l1", self.l1),
            ("disc", self.disc),
            ("total", self.total),
        ]
    }

    /// One training-log line. Values use the shortest exact decimal form so
    /// [`LossReport::parse_line`] restores them bit for bit.
    pub fn to_line(&self, step: usize, wall_secs: Option<f64>) -> String {
        let mut s = format!("step={step}");
        for (k, v) in self.fields() {
            s.push_str(&format!(" {k}={v:?}"));
        }
        s.push_str(&format!(" batch_size={}", self.batch_size));
        if let Some(w) = wall_secs {
            s.push_str(&format!(" wall={w:.3}"));
        }
        s
    }

    /// Parses a line produced by [`LossReport::to_line`], returning the step.
    pub fn parse_line(line: &str) -> Result<(usize, Self)> {
        let bad = |m: String| Error::Report(format!("loss line: {m}"));
        let mut step = None;
        let mut r = LossReport {
            color: f64::NAN,
            rotation: f64::NAN,
            puzzle: f64::NAN,
            categ: f64::NAN,
            cgan: f64::NAN,
            l1: f64::NAN,
            disc: f64::NAN,
            total: f64::NAN,
            batch_size: 0,
        };
        let mut seen = 0u32;
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| bad(format!("bad token `{tok}`")))?;
            let num = || {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("bad value `{tok}`")))
            };
            let int = || {
                v.parse::<usize>()
                    .map_err(|_| bad(format!("bad value `{tok}`")))
            };
            let slot = match k {
                "step" => {
                    step = Some(int()?);
                    continue;
                }
                "batch_size" => {
                    r.batch_size = int()?;
                    seen |= 1 << 8;
                    continue;
                }
                "wall" => continue,
                "color" => (&mut r.color, 0),
                "rotation" => (&mut r.rotation, 1),
                "puzzle" => (&mut r.puzzle, 2),
                "categ" => (&mut r.categ, 3),
                "cgan" => (&mut r.cgan, 4),
                "l1" => (&mut r.l1, 5),
                "disc" => (&mut r.disc, 6),
                "total" => (&mut r.total, 7),
                _ => return Err(bad(format!("unknown key `{k}`"))),
            };
            *slot.0 = num()?;
            seen |= 1 << slot.1;
        }
        match step {
            Some(s) if seen == 0x1ff => Ok((s, r)),
            _ => Err(bad("missing fields".into())),
        }
    }
}

impl fmt::Display for LossReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.fields() {
            write!(f, "{k}={v:.6} ")?;
        }
        write!(f, "batch_size={}", self.batch_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pretext_forge_autograd::{Init, ParamStore};
    use proptest::prelude::*;

    #[test]
    fn cross_entropy_values() {
        let ce: f64 = cross_entropy(&[[0.0; 4]], &[2]).unwrap();
        assert!((ce - 4f64.ln()).abs() < 1e-12);
        let ce: f64 = cross_entropy(&[[0.0, 100.0, 0.0]], &[1]).unwrap();
        assert!(ce < 1e-9);
        let ce: f64 = cross_entropy(&[[1.0, 0.0]], &[0]).unwrap();
        assert!((ce - (1.0 + (-1f64).exp()).ln()).abs() < 1e-12);
        assert!((ce - 0.313262).abs() < 1e-6);
        assert!(matches!(
            cross_entropy::<f64, _>(&[[0.0, 0.0]], &[2]),
            Err(Error::InvalidTarget {
                index: 2,
                classes: 2
            })
        ));
    }

    #[test]
    fn cgan_values() {
        let v: f64 = cgan_value(&[0.5], &[0.5]).unwrap();
        assert!((v + 1.386294).abs() < 1e-6);
        let v: f64 = cgan_value(&[1.0 - 1e-12], &[1e-12]).unwrap();
        assert!(v.abs() < 1e-6);
        let v: f64 = cgan_value(&[0.9, 0.8], &[0.1, 0.2]).unwrap();
        let want = ((0.9f64.ln() * 2.0) + (0.8f64.ln() * 2.0)) / 2.0;
        assert!((v - want).abs() < 1e-12);
        assert!(cgan_value::<f64>(&[0.0], &[1.0]).unwrap().is_finite());
    }

    #[test]
    fn generator_modes() {
        let ns: f64 = generator_adv_loss(&[0.25], GanMode::NonSaturating).unwrap();
        assert!((ns - 4f64.ln()).abs() < 1e-12);
        let s: f64 = generator_adv_loss(&[0.25], GanMode::Saturating).unwrap();
        assert!((s - 0.75f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn l1_values() {
        let a = [0.1, 0.3, 0.0, 0.2];
        assert!((l1_mean(&a, &[0.0; 4]).unwrap() - 0.15f64).abs() < 1e-12);
        assert_eq!(l1_mean(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        assert!((l1_mean(&b, &a).unwrap() - 0.5).abs() < 1e-12);
        let img = |d: Vec<f64>| AbImage {
            width: 2,
            height: 1,
            data: d,
        };
        assert!((l1_ab(&[img(a.to_vec())], &[img(vec![0.0; 4])]).unwrap() - 0.15).abs() < 1e-12);
        let small = AbImage {
            width: 1,
            height: 1,
            data: vec![0.0; 2],
        };
        assert!(l1_ab(&[small], &[img(vec![0.0; 4])]).is_err());
    }

    #[test]
    fn composite_values() {
        let w = LossWeights::default();
        assert_eq!(color_loss(0.0, 0.0, &w), 0.0);
        assert_eq!(color_loss(1.5, 0.25, &w), 1.5 + 100.0 * 0.25);
        let no_l1 = LossWeights { alpha: 0.0, ..w };
        assert_eq!(color_loss(1.5, 0.25, &no_l1), 1.5);
        assert!((total_loss(1.0, 1.0, 1.0, 1.0, &w) - 1.0f64).abs() < 1e-9);
        let e1 = LossWeights::new(100.0, [1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(total_loss(3.0, 7.0, 8.0, 9.0, &e1), 3.0);
        let e2 = LossWeights::new(100.0, [2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(total_loss(3.0, 7.0, 8.0, 9.0, &e2), 6.0);
        assert!(LossWeights::new(-1.0, [0.0; 4]).is_err());
    }

    #[test]
    fn report_line_round_trip() {
        let w = LossWeights::default();
        let r = LossReport::new([1.0 / 3.0, 0.5, 4.6, 2.0], 0.7, 0.01, 1.3, &w, 8);
        let line = r.to_line(12, Some(0.25));
        let (step, back) = LossReport::parse_line(&line).unwrap();
        assert_eq!(step, 12);
        assert_eq!(back, r);
        assert!(LossReport::parse_line("step=1 color=2").is_err());
    }

    #[test]
    fn nodes_match_plain_functions() {
        let mut t = Tape::<f64>::new();
        let l = t.input(Tensor::from_vec(&[3], vec![0.3, -1.0, 2.0]).unwrap());
        let n = cross_entropy_node(&mut t, l, 1).unwrap();
        assert_eq!(t.item(n), cross_entropy(&[[0.3, -1.0, 2.0]], &[1]).unwrap());
        let r = t.input(Tensor::from_vec(&[2], vec![0.9, 0.8]).unwrap());
        let f = t.input(Tensor::from_vec(&[2], vec![0.1, 0.2]).unwrap());
        let v = cgan_value_node(&mut t, r, f).unwrap();
        let want = cgan_value(&[0.9, 0.8], &[0.1, 0.2]).unwrap();
        assert!((t.item(v) - want).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        use pretext_forge_autograd::gradcheck::check_gradients;
        let mut store = ParamStore::<f64>::new(3);
        let z = store.alloc("z", &[5], Init::Uniform { bound: 1.0 });
        let p = store.alloc("p", &[3], Init::Uniform { bound: 1.0 });
        let target = Tensor::from_vec(&[5], vec![0.5, -0.25, 0.1, 0.9, -0.7]).unwrap();
        let ids = [z, p];
        let report = check_gradients(
            &mut store,
            &ids,
            |s| {
                let mut t = Tape::new();
                let zv = t.param(s, z);
                let pv = t.param(s, p);
                let ce = cross_entropy_node(&mut t, zv, 3).unwrap();
                let l1 = l1_node(&mut t, zv, &target).unwrap();
                let probs = t.sigmoid(pv);
                let fake = t.sigmoid(zv);
                let adv = generator_adv_node(&mut t, fake, GanMode::NonSaturating).unwrap();
                let sat = generator_adv_node(&mut t, probs, GanMode::Saturating).unwrap();
                let d = discriminator_loss_node(&mut t, probs, probs).unwrap();
                let total = t
                    .weighted_sum(&[(ce, 1.0), (l1, 2.0), (adv, 0.5), (sat, 0.3), (d, 0.7)])
                    .unwrap();
                (t, total)
            },
            1e-6,
            1e-7,
        );
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    proptest! {
        #[test]
        fn cross_entropy_is_nonnegative(
            logits in prop::collection::vec(-50.0f64..50.0, 2..10),
            t in 0usize..10,
        ) {
            let t = t % logits.len();
            prop_assert!(cross_entropy(&[logits], &[t]).unwrap() >= 0.0);
        }

        #[test]
        fn total_is_linear_in_gamma(
            c in prop::array::uniform4(0.0f64..10.0),
            g in prop::array::uniform4(0.0f64..2.0),
            h in prop::array::uniform4(0.0f64..2.0),
        ) {
            let w = |g: [f64; 4]| LossWeights { alpha: 100.0, gamma: g };
            let sum: [f64; 4] = std::array::from_fn(|i| g[i] + h[i]);
            let lhs = total_loss(c[0], c[1], c[2], c[3], &w(sum));
            let rhs = total_loss(c[0], c[1], c[2], c[3], &w(g)) + total_loss(c[0], c[1], c[2], c[3], &w(h));
            prop_assert!((lhs - rhs).abs() < 1e-9);
            let bumped = total_loss(c[0] + 1.0, c[1], c[2], c[3], &w(g));
            prop_assert!(bumped >= total_loss(c[0], c[1], c[2], c[3], &w(g)));
        }
    }

    #[test]
    fn clamp_grid_probe() {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let best_real = grid
            .iter()
            .copied()
            .max_by(|a, b| {
                cgan_value(&[*a], &[0.5])
                    .unwrap()
                    .total_cmp(&cgan_value(&[*b], &[0.5]).unwrap())
            })
            .unwrap();
        assert_eq!(clamp_prob(best_real), 1.0 - PROB_EPS);
        let best_fake = grid
            .iter()
            .copied()
            .max_by(|a, b| {
                cgan_value(&[0.5], &[*a])
                    .unwrap()
                    .total_cmp(&cgan_value(&[0.5], &[*b]).unwrap())
            })
            .unwrap();
        assert_eq!(1.0 - clamp_prob(best_fake), 1.0 - PROB_EPS);
    }
}
