use crate::error::{Error, Result};
use crate::filter::FilterCoeffs;
use crate::spikes::{SpikeTensor, Trace};

#[derive(Debug, Clone, PartialEq)]
pub enum LossKind {
    /// Cross-entropy of the softmax over per-channel spike counts.
    RateCrossEntropy,
    /// Squared distance between kernel-filtered output and target trains.
    VanRossum { kernel: FilterCoeffs },
}

impl LossKind {
    pub fn van_rossum(kernel: FilterCoeffs) -> Result<Self> {
        if !kernel.is_stable() {
            return Err(Error::UnstableFilter {
                modulus: kernel.max_pole_modulus(),
            });
        }
        Ok(LossKind::VanRossum { kernel })
    }
}

/// What a sample should produce at the output layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Class(usize),
    Pattern(SpikeTensor),
}

impl LossKind {
    /// Loss and `dE/dO` for one sample's output activity.
    pub fn evaluate(&self, output: &Trace, target: &Target) -> Result<(f64, Trace)> {
        match (self, target) {
            (LossKind::RateCrossEntropy, Target::Class(label)) => rate_loss_trace(output, *label),
            (LossKind::VanRossum { kernel }, Target::Pattern(p)) => {
                van_rossum_loss_trace(output, &p.to_trace(), kernel)
            }
            (LossKind::RateCrossEntropy, Target::Pattern(_)) => {
                Err(Error::param("target", "rate cross-entropy needs a class label"))
            }
            (LossKind::VanRossum { .. }, Target::Class(_)) => {
                Err(Error::param("target", "van Rossum loss needs a target spike pattern"))
            }
        }
    }
}

pub fn rate_loss(output: &SpikeTensor, label: usize) -> Result<(f64, Trace)> {
    rate_loss_trace(&output.to_trace(), label)
}

/// `-log p_label` with `p = softmax(sum_t O[t, :])`. The gradient `p_i - y_i` is the same at
/// every step because the count is a plain sum over time.
pub fn rate_loss_trace(output: &Trace, label: usize) -> Result<(f64, Trace)> {
    let n = output.channels();
    if label >= n {
        return Err(Error::shape("class label", format!("< {n}"), label));
    }
    let counts = output.channel_sums();
    let max = counts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = counts.iter().map(|c| (c - max).exp()).sum();
    let log_z = max + z.ln();
    let loss = log_z - counts[label];
    let grad_row: Vec<f64> = counts
        .iter()
        .enumerate()
        .map(|(i, c)| (c - log_z).exp() - if i == label { 1.0 } else { 0.0 })
        .collect();
    let mut grad = Trace::zeros(output.horizon(), n);
    for t in 0..output.horizon() {
        grad.row_mut(t).copy_from_slice(&grad_row);
    }
    Ok((loss, grad))
}

pub fn van_rossum_loss(output: &SpikeTensor, target: &SpikeTensor, kernel: &FilterCoeffs) -> Result<(f64, Trace)> {
    van_rossum_loss_trace(&output.to_trace(), &target.to_trace(), kernel)
}

/// `1/(2T) sum_i sum_t (k*O_i - k*S_i)^2`. The gradient is the residual run backwards
/// through the kernel (the adjoint of the filter).
pub fn van_rossum_loss_trace(output: &Trace, target: &Trace, kernel: &FilterCoeffs) -> Result<(f64, Trace)> {
    check_same_shape(output, target)?;
    let horizon = output.horizon();
    let scale = 1.0 / horizon.max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Trace::zeros(horizon, output.channels());
    let mut residual = vec![0.0; horizon];
    for n in 0..output.channels() {
        let a = kernel.apply(&column(output, n));
        let b = kernel.apply(&column(target, n));
        for t in 0..horizon {
            let d = a[t] - b[t];
            loss += d * d;
            residual[t] = d * scale;
        }
        for (t, g) in filter_adjoint(kernel, &residual).into_iter().enumerate() {
            grad.set(t, n, g);
        }
    }
    Ok((0.5 * scale * loss, grad))
}

/// Van Rossum distance (same normalisation as the loss) between two spike trains.
pub fn van_rossum_distance(a: &SpikeTensor, b: &SpikeTensor, kernel: &FilterCoeffs) -> Result<f64> {
    van_rossum_distance_trace(&a.to_trace(), &b.to_trace(), kernel)
}

pub fn van_rossum_distance_trace(a: &Trace, b: &Trace, kernel: &FilterCoeffs) -> Result<f64> {
    check_same_shape(a, b)?;
    let horizon = a.horizon();
    let mut sum = 0.0;
    for n in 0..a.channels() {
        let ka = kernel.apply(&column(a, n));
        let kb = kernel.apply(&column(b, n));
        sum += ka.iter().zip(&kb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    }
    Ok(sum / (2.0 * horizon.max(1) as f64))
}

fn check_same_shape(a: &Trace, b: &Trace) -> Result<()> {
    if a.horizon() != b.horizon() || a.channels() != b.channels() {
        return Err(Error::shape(
            "spike train pair",
            format!("{}x{}", a.horizon(), a.channels()),
            format!("{}x{}", b.horizon(), b.channels()),
        ));
    }
    Ok(())
}

fn column(trace: &Trace, n: usize) -> Vec<f64> {
    (0..trace.horizon()).map(|t| trace.get(t, n)).collect()
}

/// Given `dE/dF[t]` for `F = filter(x)`, returns `dE/dx[t]`.
pub fn filter_adjoint(coeffs: &FilterCoeffs, upstream: &[f64]) -> Vec<f64> {
    let horizon = upstream.len();
    let mut total = vec![0.0; horizon];
    for t in (0..horizon).rev() {
        let mut acc = upstream[t];
        for (p, a) in coeffs.feedback().iter().enumerate() {
            let s = t + p + 1;
            if s >= horizon {
                break;
            }
            acc += a * total[s];
        }
        total[t] = acc;
    }
    (0..horizon)
        .map(|t| {
            coeffs
                .feedforward()
                .iter()
                .enumerate()
                .take_while(|(q, _)| t + q < horizon)
                .map(|(q, b)| b * total[t + q])
                .sum()
        })
        .collect()
}
