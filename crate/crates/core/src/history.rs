//! Dense solution history with cubic Hermite interpolation.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{fmt17, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error("node time {t} does not exceed current end {t_max}")]
    NonMonotone { t: f64, t_max: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("query time {t} outside stored history [{t_min}, {t_max}]")]
    OutOfRange { t: f64, t_min: f64, t_max: f64 },
    #[error("non-finite value at t = {0}")]
    NonFinite(f64),
    #[error("initial function queried at {t}, outside [-{tau}, 0]")]
    InitialDomain { t: f64, tau: f64 },
    #[error("trajectory is empty")]
    Empty,
}

/// A solution history: node times, states and derivatives.
///
/// Storage is flat; node `i` occupies `states[i*n..(i+1)*n]`. Nodes dropped by
/// [`Trajectory::prune_before`] are counted in `offset`, so global node
/// indices remain stable while a run is in progress.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    dim: usize,
    times: Vec<T>,
    states: Vec<T>,
    derivs: Vec<T>,
    /// Left-sided derivatives at derivative discontinuities, keyed by global index.
    breakpoints: Vec<(usize, Vec<T>)>,
    offset: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn new(dim: usize) -> Self {
        Self::with_capacity(dim, 0)
    }

    pub fn with_capacity(dim: usize, nodes: usize) -> Self {
        Self {
            dim,
            times: Vec::with_capacity(nodes),
            states: Vec::with_capacity(nodes * dim),
            derivs: Vec::with_capacity(nodes * dim),
            breakpoints: Vec::new(),
            offset: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored nodes.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Nodes discarded by pruning.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn t_min(&self) -> Option<T> {
        self.times.first().copied()
    }

    pub fn t_max(&self) -> Option<T> {
        self.times.last().copied()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn time(&self, i: usize) -> T {
        self.times[i]
    }

    pub fn state(&self, i: usize) -> &[T] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn derivative(&self, i: usize) -> &[T] {
        &self.derivs[i * self.dim..(i + 1) * self.dim]
    }

    /// State of the node with global index `g` (counting pruned nodes).
    pub fn state_global(&self, g: usize) -> &[T] {
        self.state(g - self.offset)
    }

    pub fn last_state(&self) -> Option<&[T]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &[T], &[T])> + '_ {
        (0..self.len()).map(move |i| (self.times[i], self.state(i), self.derivative(i)))
    }

    pub fn append(&mut self, t: T, x: &[T], dx: &[T]) -> Result<(), HistoryError> {
        if x.len() != self.dim {
            return Err(HistoryError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if dx.len() != self.dim {
            return Err(HistoryError::DimensionMismatch { expected: self.dim, got: dx.len() });
        }
        if let Some(t_max) = self.t_max() {
            if !(t > t_max) {
                return Err(HistoryError::NonMonotone { t: t.as_f64(), t_max: t_max.as_f64() });
            }
        }
        if !t.is_finite() || x.iter().chain(dx).any(|v| !v.is_finite()) {
            return Err(HistoryError::NonFinite(t.as_f64()));
        }
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.derivs.extend_from_slice(dx);
        Ok(())
    }

    /// Records a left-sided derivative for the most recently appended node.
    /// Interpolation on the segment ending at that node uses it instead of
    /// the stored (right-sided) derivative.
    pub fn mark_breakpoint(&mut self, left_derivative: &[T]) -> Result<(), HistoryError> {
        if self.is_empty() {
            return Err(HistoryError::Empty);
        }
        if left_derivative.len() != self.dim {
            return Err(HistoryError::DimensionMismatch { expected: self.dim, got: left_derivative.len() });
        }
        let g = self.offset + self.len() - 1;
        self.breakpoints.push((g, left_derivative.to_vec()));
        Ok(())
    }

    /// Global indices of nodes carrying a left-sided derivative.
    pub fn breakpoints(&self) -> impl Iterator<Item = usize> + '_ {
        self.breakpoints.iter().map(|(g, _)| *g)
    }

    fn left_derivative(&self, i: usize) -> &[T] {
        let g = self.offset + i;
        self.breakpoints.iter().find(|(b, _)| *b == g).map_or_else(|| self.derivative(i), |(_, d)| d.as_slice())
    }

    /// Index `i` of the segment `[t_i, t_{i+1}]` containing `t`.
    fn segment(&self, t: T) -> Result<usize, HistoryError> {
        let (t_min, t_max) = match (self.t_min(), self.t_max()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(HistoryError::Empty),
        };
        if !(t >= t_min && t <= t_max) {
            return Err(HistoryError::OutOfRange { t: t.as_f64(), t_min: t_min.as_f64(), t_max: t_max.as_f64() });
        }
        let n = self.len();
        if n == 1 {
            return Ok(0);
        }
        let i = self.times.partition_point(|&s| s <= t);
        Ok(i.saturating_sub(1).min(n - 2))
    }

    /// Cubic Hermite interpolation of state and derivative at `t`.
    pub fn sample(&self, t: T) -> Result<(Vec<T>, Vec<T>), HistoryError> {
        let mut x = vec![T::zero(); self.dim];
        let mut dx = vec![T::zero(); self.dim];
        self.sample_into(t, &mut x, &mut dx)?;
        Ok((x, dx))
    }

    pub fn sample_into(&self, t: T, x: &mut [T], dx: &mut [T]) -> Result<(), HistoryError> {
        let i = self.segment(t)?;
        if self.len() == 1 {
            x.copy_from_slice(self.state(0));
            dx.copy_from_slice(self.derivative(0));
            return Ok(());
        }
        let t0 = self.times[i];
        let t1 = self.times[i + 1];
        if t == t0 {
            x.copy_from_slice(self.state(i));
            dx.copy_from_slice(self.derivative(i));
            return Ok(());
        }
        if t == t1 {
            x.copy_from_slice(self.state(i + 1));
            dx.copy_from_slice(self.left_derivative(i + 1));
            return Ok(());
        }
        hermite(
            t1 - t0,
            (t - t0) / (t1 - t0),
            self.state(i),
            self.derivative(i),
            self.state(i + 1),
            self.left_derivative(i + 1),
            x,
            dx,
        );
        Ok(())
    }

    /// Hermite midpoint of the segment starting at global node `g`.
    pub(crate) fn midpoint_global(&self, g: usize, out: &mut [T]) {
        let i = g - self.offset;
        let h = self.times[i + 1] - self.times[i];
        let x0 = self.state(i);
        let x1 = self.state(i + 1);
        let d0 = self.derivative(i);
        let d1 = self.left_derivative(i + 1);
        let half = T::lit(0.5);
        let eighth = T::lit(0.125);
        for k in 0..self.dim {
            out[k] = x0[k] + half * (x1[k] - x0[k]) + eighth * h * (d0[k] - d1[k]);
        }
    }

    /// Drops nodes strictly older than the last node at or before `t_cut`.
    pub fn prune_before(&mut self, t_cut: T) {
        let keep_from = self.times.partition_point(|&s| s <= t_cut).saturating_sub(1);
        if keep_from == 0 {
            return;
        }
        self.times.drain(..keep_from);
        self.states.drain(..keep_from * self.dim);
        self.derivs.drain(..keep_from * self.dim);
        self.offset += keep_from;
        let offset = self.offset;
        self.breakpoints.retain(|(g, _)| *g >= offset);
    }

    /// Writes `t,x1,...,xn,dx1,...,dxn` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", csv_header(self.dim))?;
        let mut line = String::new();
        for (t, x, dx) in self.iter() {
            line.clear();
            line.push_str(&fmt17(t));
            for v in x.iter().chain(dx) {
                line.push(',');
                line.push_str(&fmt17(*v));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

pub fn csv_header(dim: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=dim {
        h.push_str(&format!(",x{i}"));
    }
    for i in 1..=dim {
        h.push_str(&format!(",dx{i}"));
    }
    h
}

/// Cubic Hermite basis on a segment of length `h` at local coordinate `s ∈ [0, 1]`.
#[allow(clippy::too_many_arguments)]
fn hermite<T: Real>(h: T, s: T, x0: &[T], d0: &[T], x1: &[T], d1: &[T], x: &mut [T], dx: &mut [T]) {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let six = T::lit(6.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h10 = s3 - two * s2 + s;
    let h01 = three * s2 - two * s3;
    let h11 = s3 - s2;
    let g10 = three * s2 - T::lit(4.0) * s + one;
    let g01 = (six * s - six * s2) / h;
    let g11 = three * s2 - two * s;
    // Written around x0 so a constant history is reproduced exactly.
    for k in 0..x.len() {
        let dx01 = x1[k] - x0[k];
        x[k] = x0[k] + h01 * dx01 + h * (h10 * d0[k] + h11 * d1[k]);
        dx[k] = g01 * dx01 + g10 * d0[k] + g11 * d1[k];
    }
}

type InitialFn<T> = Arc<dyn Fn(T) -> Vec<T> + Send + Sync>;

/// The prescribed past `φ : [−τ, 0] → Rⁿ`.
#[derive(Clone)]
pub struct InitialFunction<T> {
    dim: usize,
    tau: T,
    f: InitialFn<T>,
}

impl<T> fmt::Debug for InitialFunction<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialFunction").field("dim", &self.dim).field("tau", &self.tau).finish_non_exhaustive()
    }
}

impl<T: Real> InitialFunction<T> {
    pub fn from_fn(dim: usize, tau: T, f: impl Fn(T) -> Vec<T> + Send + Sync + 'static) -> Self {
        Self { dim, tau, f: Arc::new(f) }
    }

    pub fn constant(x0: Vec<T>, tau: T) -> Self {
        let dim = x0.len();
        Self::from_fn(dim, tau, move |_| x0.clone())
    }

    /// Piecewise-linear interpolation of tabulated `(t, x)` samples; constant
    /// extrapolation outside the table.
    pub fn tabulated(times: Vec<T>, values: Vec<Vec<T>>, tau: T) -> Result<Self, HistoryError> {
        let dim = values.first().map_or(0, Vec::len);
        if times.is_empty() || times.len() != values.len() {
            return Err(HistoryError::DimensionMismatch { expected: times.len(), got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| v.len() != dim) {
            return Err(HistoryError::DimensionMismatch { expected: dim, got: v.len() });
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(HistoryError::NonMonotone { t: w[1].as_f64(), t_max: w[0].as_f64() });
        }
        Ok(Self::from_fn(dim, tau, move |t| {
            let i = times.partition_point(|&s| s <= t);
            if i == 0 {
                return values[0].clone();
            }
            if i == times.len() {
                return values[i - 1].clone();
            }
            let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
            values[i - 1].iter().zip(&values[i]).map(|(&a, &b)| a + w * (b - a)).collect()
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    /// Evaluates φ(t) for `t ∈ [−τ, 0]`.
    pub fn eval(&self, t: T) -> Result<Vec<T>, HistoryError> {
        let slack = T::epsilon() * T::lit(16.0) * self.tau.max(T::one());
        if !(t >= -self.tau - slack && t <= slack) {
            return Err(HistoryError::InitialDomain { t: t.as_f64(), tau: self.tau.as_f64() });
        }
        let x = (self.f)(t);
        if x.len() != self.dim {
            return Err(HistoryError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HistoryError::NonFinite(t.as_f64()));
        }
        Ok(x)
    }
}
