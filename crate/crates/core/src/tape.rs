//! Reverse-mode automatic differentiation over flat `f64` buffers.
//!
//! A [`Tape`] records one forward computation; [`Tape::backward`] replays it
//! in reverse and accumulates gradients. Nodes are created in topological
//! order by construction, so the reverse sweep is a single pass. Every op
//! here is checked against central finite differences in the unit tests.

use crate::params::{ParamId, ParamStore};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

type BackwardFn = Box<dyn Fn(&[Vec<f64>], &mut [Vec<f64>])>;

#[derive(Default)]
pub struct Tape {
    values: Vec<Vec<f64>>,
    ops: Vec<Option<BackwardFn>>,
    param_vars: Vec<(ParamId, Var)>,
}

/// Gradients produced by one backward pass.
pub struct Gradients {
    grads: Vec<Vec<f64>>,
    param_vars: Vec<(ParamId, Var)>,
}

impl Gradients {
    pub fn wrt(&self, x: Var) -> &[f64] {
        &self.grads[x.0]
    }

    /// Gradient w.r.t. a registered parameter, zeros if it never entered the
    /// forward pass.
    pub fn of_param(&self, id: ParamId, len: usize) -> Vec<f64> {
        for (pid, var) in &self.param_vars {
            if *pid == id {
                return self.grads[var.0].clone();
            }
        }
        vec![0.0; len]
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, x: Var) -> &[f64] {
        &self.values[x.0]
    }

    pub fn scalar(&self, x: Var) -> f64 {
        debug_assert_eq!(self.values[x.0].len(), 1, "scalar() on non-scalar node");
        self.values[x.0][0]
    }

    /// Index the next node will get; backward closures capture this.
    fn next(&self) -> usize {
        self.values.len()
    }

    fn push(&mut self, value: Vec<f64>, op: Option<BackwardFn>) -> Var {
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    /// Leaf holding a constant; no gradient flows into it.
    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.push(value, None)
    }

    pub fn scalar_constant(&mut self, value: f64) -> Var {
        self.constant(vec![value])
    }

    /// Leaf bound to a trainable parameter. Repeated requests for the same
    /// parameter return the same node so gradients accumulate in one place.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        for (pid, var) in &self.param_vars {
            if *pid == id {
                return *var;
            }
        }
        let var = self.push(store.get(id).data.clone(), None);
        self.param_vars.push((id, var));
        var
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.next();
        let (va, vb) = (&self.values[a.0], &self.values[b.0]);
        debug_assert_eq!(va.len(), vb.len());
        let value: Vec<f64> = va.iter().zip(vb).map(|(x, y)| x + y).collect();
        self.push(
            value,
            Some(Box::new(move |_v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] += gi;
                    g[b.0][i] += gi;
                }
                g[out] = grad;
            })),
        )
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.next();
        let (va, vb) = (&self.values[a.0], &self.values[b.0]);
        debug_assert_eq!(va.len(), vb.len());
        let value: Vec<f64> = va.iter().zip(vb).map(|(x, y)| x - y).collect();
        self.push(
            value,
            Some(Box::new(move |_v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] += gi;
                    g[b.0][i] -= gi;
                }
                g[out] = grad;
            })),
        )
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.next();
        let (va, vb) = (&self.values[a.0], &self.values[b.0]);
        debug_assert_eq!(va.len(), vb.len());
        let value: Vec<f64> = va.iter().zip(vb).map(|(x, y)| x * y).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] += gi * v[b.0][i];
                    g[b.0][i] += gi * v[a.0][i];
                }
                g[out] = grad;
            })),
        )
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let out = self.next();
        let (va, vb) = (&self.values[a.0], &self.values[b.0]);
        debug_assert_eq!(va.len(), vb.len());
        let value: Vec<f64> = va.iter().zip(vb).map(|(x, y)| x / y).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    let bi = v[b.0][i];
                    g[a.0][i] += gi / bi;
                    g[b.0][i] -= gi * v[a.0][i] / (bi * bi);
                }
                g[out] = grad;
            })),
        )
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.next();
        let value: Vec<f64> = self.values[a.0].iter().map(|x| x * c).collect();
        self.push(
            value,
            Some(Box::new(move |_v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] += gi * c;
                }
                g[out] = grad;
            })),
        )
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let out = self.next();
        let mut value = Vec::new();
        let mut layout = Vec::with_capacity(parts.len());
        for p in parts {
            layout.push((p.0, value.len(), self.values[p.0].len()));
            value.extend_from_slice(&self.values[p.0]);
        }
        self.push(
            value,
            Some(Box::new(move |_v, g| {
                let grad = std::mem::take(&mut g[out]);
                for &(src, off, len) in &layout {
                    for i in 0..len {
                        g[src][i] += grad[off + i];
                    }
                }
                g[out] = grad;
            })),
        )
    }

    pub fn slice(&mut self, a: Var, offset: usize, len: usize) -> Var {
        let out = self.next();
        let value = self.values[a.0][offset..offset + len].to_vec();
        self.push(
            value,
            Some(Box::new(move |_v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][offset + i] += gi;
                }
                g[out] = grad;
            })),
        )
    }

    pub fn index(&mut self, a: Var, i: usize) -> Var {
        self.slice(a, i, 1)
    }

    /// y = W x with W a row-major (rows × cols) node.
    pub fn matvec(&mut self, w: Var, rows: usize, cols: usize, x: Var) -> Var {
        let out = self.next();
        debug_assert_eq!(self.values[w.0].len(), rows * cols);
        debug_assert_eq!(self.values[x.0].len(), cols);
        let wv = &self.values[w.0];
        let xv = &self.values[x.0];
        let mut value = vec![0.0; rows];
        for r in 0..rows {
            let row = &wv[r * cols..(r + 1) * cols];
            value[r] = row.iter().zip(xv).map(|(a, b)| a * b).sum();
        }
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for r in 0..rows {
                    let gr = grad[r];
                    if gr == 0.0 {
                        continue;
                    }
                    for c in 0..cols {
                        g[w.0][r * cols + c] += gr * v[x.0][c];
                        g[x.0][c] += gr * v[w.0][r * cols + c];
                    }
                }
                g[out] = grad;
            })),
        )
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.next();
        let value: Vec<f64> = self.values[a.0].iter().map(|x| x.tanh()).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    let y = v[out][i];
                    g[a.0][i] += gi * (1.0 - y * y);
                }
                g[out] = grad;
            })),
        )
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.next();
        let value: Vec<f64> = self.values[a.0].iter().map(|x| x.max(0.0)).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    if v[a.0][i] > 0.0 {
                        g[a.0][i] += gi;
                    }
                }
                g[out] = grad;
            })),
        )
    }

    /// Smooth GELU (tanh approximation).
    pub fn gelu(&mut self, a: Var) -> Var {
        const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
        const K: f64 = 0.044715;
        let out = self.next();
        let value: Vec<f64> = self.values[a.0]
            .iter()
            .map(|&x| 0.5 * x * (1.0 + (C * (x + K * x * x * x)).tanh()))
            .collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    let x = v[a.0][i];
                    let t = (C * (x + K * x * x * x)).tanh();
                    let du = C * (1.0 + 3.0 * K * x * x);
                    g[a.0][i] += gi * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du);
                }
                g[out] = grad;
            })),
        )
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.next();
        let value: Vec<f64> = self.values[a.0].iter().map(|x| x.exp()).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] += gi * v[out][i];
                }
                g[out] = grad;
            })),
        )
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let out = self.next();
        let value: Vec<f64> = self.values[a.0].iter().map(|x| x.ln()).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] += gi / v[a.0][i];
                }
                g[out] = grad;
            })),
        )
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let out = self.next();
        let value: Vec<f64> = self.values[a.0].iter().map(|x| x.sqrt()).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] += gi / (2.0 * v[out][i]);
                }
                g[out] = grad;
            })),
        )
    }

    /// Elementwise max(x, c); gradient passes only where x > c.
    pub fn max_const(&mut self, a: Var, c: f64) -> Var {
        let out = self.next();
        let value: Vec<f64> = self.values[a.0].iter().map(|x| x.max(c)).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    if v[a.0][i] > c {
                        g[a.0][i] += gi;
                    }
                }
                g[out] = grad;
            })),
        )
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = self.next();
        let n = self.values[a.0].len();
        let value = vec![self.values[a.0].iter().sum()];
        self.push(
            value,
            Some(Box::new(move |_v, g| {
                let gi = g[out][0];
                for i in 0..n {
                    g[a.0][i] += gi;
                }
            })),
        )
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let out = self.next();
        let n = self.values[a.0].len();
        let value = vec![self.values[a.0].iter().sum::<f64>() / n as f64];
        self.push(
            value,
            Some(Box::new(move |_v, g| {
                let gi = g[out][0] / n as f64;
                for i in 0..n {
                    g[a.0][i] += gi;
                }
            })),
        )
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let out = self.next();
        let (va, vb) = (&self.values[a.0], &self.values[b.0]);
        debug_assert_eq!(va.len(), vb.len());
        let n = va.len();
        let value = vec![va.iter().zip(vb).map(|(x, y)| x * y).sum()];
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let gi = g[out][0];
                for i in 0..n {
                    g[a.0][i] += gi * v[b.0][i];
                    g[b.0][i] += gi * v[a.0][i];
                }
            })),
        )
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let out = self.next();
        let value = softmax_values(&self.values[a.0]);
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                let y = &v[out];
                let inner: f64 = grad.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] += y[i] * (gi - inner);
                }
                g[out] = grad;
            })),
        )
    }

    pub fn log_softmax(&mut self, a: Var) -> Var {
        let out = self.next();
        let x = &self.values[a.0];
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let value: Vec<f64> = x.iter().map(|v| v - lse).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                let gsum: f64 = grad.iter().sum();
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] += gi - v[out][i].exp() * gsum;
                }
                g[out] = grad;
            })),
        )
    }

    /// ln Σ exp(x_i), max-shifted.
    pub fn logsumexp(&mut self, a: Var) -> Var {
        let out = self.next();
        let x = &self.values[a.0];
        let n = x.len();
        let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let value = vec![m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()];
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let gi = g[out][0];
                let y = v[out][0];
                for i in 0..n {
                    g[a.0][i] += gi * (v[a.0][i] - y).exp();
                }
            })),
        )
    }

    /// Identity forward; backward multiplies the incoming gradient by -scale.
    pub fn grad_reverse(&mut self, a: Var, scale: f64) -> Var {
        let out = self.next();
        let value = self.values[a.0].clone();
        self.push(
            value,
            Some(Box::new(move |_v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (i, gi) in grad.iter().enumerate() {
                    g[a.0][i] -= scale * gi;
                }
                g[out] = grad;
            })),
        )
    }

    /// y = Σ_j weights[j] · vecs[j].
    pub fn weighted_sum(&mut self, weights: Var, vecs: &[Var]) -> Var {
        let out = self.next();
        debug_assert_eq!(self.values[weights.0].len(), vecs.len());
        let dim = self.values[vecs[0].0].len();
        let mut value = vec![0.0; dim];
        for (j, vec) in vecs.iter().enumerate() {
            let wj = self.values[weights.0][j];
            for (o, x) in value.iter_mut().zip(&self.values[vec.0]) {
                *o += wj * x;
            }
        }
        let vec_ids: Vec<usize> = vecs.iter().map(|v| v.0).collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                for (j, &vid) in vec_ids.iter().enumerate() {
                    let wj = v[weights.0][j];
                    let mut dw = 0.0;
                    for (i, gi) in grad.iter().enumerate() {
                        dw += gi * v[vid][i];
                        g[vid][i] += wj * gi;
                    }
                    g[weights.0][j] += dw;
                }
                g[out] = grad;
            })),
        )
    }

    /// y = gamma ∘ (x - mean) / sqrt(var + eps) + beta.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Var {
        let out = self.next();
        let xv = &self.values[x.0];
        let n = xv.len();
        let mu = xv.iter().sum::<f64>() / n as f64;
        let var = xv.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
        let inv_std = 1.0 / (var + eps).sqrt();
        let xhat: Vec<f64> = xv.iter().map(|v| (v - mu) * inv_std).collect();
        let value: Vec<f64> = xhat
            .iter()
            .zip(&self.values[gamma.0])
            .zip(&self.values[beta.0])
            .map(|((xh, ga), be)| xh * ga + be)
            .collect();
        self.push(
            value,
            Some(Box::new(move |v, g| {
                let grad = std::mem::take(&mut g[out]);
                let xv = &v[x.0];
                let mu = xv.iter().sum::<f64>() / n as f64;
                let var = xv.iter().map(|t| (t - mu) * (t - mu)).sum::<f64>() / n as f64;
                let inv_std = 1.0 / (var + eps).sqrt();
                let xhat: Vec<f64> = xv.iter().map(|t| (t - mu) * inv_std).collect();
                let gh: Vec<f64> = grad
                    .iter()
                    .zip(&v[gamma.0])
                    .map(|(gi, ga)| gi * ga)
                    .collect();
                let mean_gh = gh.iter().sum::<f64>() / n as f64;
                let mean_gh_xhat =
                    gh.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                for i in 0..n {
                    g[gamma.0][i] += grad[i] * xhat[i];
                    g[beta.0][i] += grad[i];
                    g[x.0][i] += inv_std * (gh[i] - mean_gh - xhat[i] * mean_gh_xhat);
                }
                g[out] = grad;
            })),
        )
    }

    /// Sum a list of scalar nodes; empty list yields a constant 0.
    pub fn sum_scalars(&mut self, terms: &[Var]) -> Var {
        match terms.len() {
            0 => self.scalar_constant(0.0),
            1 => terms[0],
            _ => {
                let joined = self.concat(terms);
                self.sum(joined)
            }
        }
    }

    /// Reverse sweep from a scalar loss node.
    pub fn backward(&mut self, loss: Var) -> Gradients {
        assert_eq!(self.values[loss.0].len(), 1, "loss must be scalar");
        let mut grads: Vec<Vec<f64>> = self.values.iter().map(|v| vec![0.0; v.len()]).collect();
        grads[loss.0][0] = 1.0;
        for idx in (0..=loss.0).rev() {
            if let Some(op) = &self.ops[idx] {
                if grads[idx].iter().all(|&g| g == 0.0) {
                    continue;
                }
                op(&self.values, &mut grads);
            }
        }
        Gradients {
            grads,
            param_vars: self.param_vars.clone(),
        }
    }
}

fn softmax_values(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite-difference check of d(loss)/d(input) for a scalar-valued
    /// builder run on perturbed copies of `input`.
    fn check_grad<F>(input: &[f64], build: F, tol: f64)
    where
        F: Fn(&mut Tape, Var) -> Var,
    {
        let mut tape = Tape::new();
        let x = tape.constant(input.to_vec());
        let loss = build(&mut tape, x);
        let analytic = tape.backward(loss).wrt(x).to_vec();

        let h = 1e-6;
        for i in 0..input.len() {
            let mut plus = input.to_vec();
            plus[i] += h;
            let mut minus = input.to_vec();
            minus[i] -= h;
            let eval = |v: Vec<f64>| {
                let mut t = Tape::new();
                let x = t.constant(v);
                let l = build(&mut t, x);
                t.scalar(l)
            };
            let numeric = (eval(plus) - eval(minus)) / (2.0 * h);
            let denom = numeric.abs().max(analytic[i].abs()).max(1e-8);
            assert!(
                (numeric - analytic[i]).abs() / denom < tol,
                "component {i}: numeric {numeric} vs analytic {}",
                analytic[i]
            );
        }
    }

    const X: [f64; 4] = [0.3, -1.2, 2.0, 0.05];

    #[test]
    fn grad_elementwise_chain() {
        check_grad(
            &X,
            |t, x| {
                let a = t.tanh(x);
                let b = t.scale(x, 0.5);
                let c = t.mul(a, b);
                let d = t.add(c, x);
                t.sum(d)
            },
            1e-5,
        );
    }

    #[test]
    fn grad_div_exp_sqrt_ln() {
        check_grad(
            &[0.8, 1.7, 0.2, 3.0],
            |t, x| {
                let e = t.exp(x);
                let s = t.sqrt(e);
                let l = t.ln(s);
                let d = t.div(l, e);
                t.mean(d)
            },
            1e-5,
        );
    }

    #[test]
    fn grad_matvec() {
        let w = [0.1, -0.4, 0.9, 0.0, 0.3, -0.2, 0.7, 1.1];
        check_grad(
            &w,
            |t, wv| {
                let x = t.constant(vec![0.5, -1.0, 0.25, 2.0]);
                let y = t.matvec(wv, 2, 4, x);
                let a = t.tanh(y);
                t.sum(a)
            },
            1e-5,
        );
        // also w.r.t. the input vector
        check_grad(
            &X,
            |t, x| {
                let w = t.constant(w.to_vec());
                let y = t.matvec(w, 2, 4, x);
                t.sum(y)
            },
            1e-5,
        );
    }

    #[test]
    fn grad_softmax_and_log_softmax() {
        check_grad(
            &X,
            |t, x| {
                let p = t.softmax(x);
                let sq = t.mul(p, p);
                t.sum(sq)
            },
            1e-5,
        );
        check_grad(
            &X,
            |t, x| {
                let lp = t.log_softmax(x);
                let picked = t.index(lp, 2);
                t.neg(picked)
            },
            1e-5,
        );
    }

    #[test]
    fn grad_logsumexp_dot_concat_slice() {
        check_grad(
            &X,
            |t, x| {
                let lse = t.logsumexp(x);
                let head = t.slice(x, 0, 2);
                let tail = t.slice(x, 2, 2);
                let d = t.dot(head, tail);
                let joined = t.concat(&[lse, d]);
                t.sum(joined)
            },
            1e-5,
        );
    }

    #[test]
    fn grad_layer_norm_and_weighted_sum() {
        check_grad(
            &X,
            |t, x| {
                let gamma = t.constant(vec![1.1, 0.9, 1.0, 1.2]);
                let beta = t.constant(vec![0.1, 0.0, -0.1, 0.2]);
                let y = t.layer_norm(x, gamma, beta, 1e-12);
                let sq = t.mul(y, y);
                t.sum(sq)
            },
            1e-4,
        );
        check_grad(
            &[0.2, 0.5, 0.3],
            |t, w| {
                let v0 = t.constant(vec![1.0, 2.0]);
                let v1 = t.constant(vec![-1.0, 0.5]);
                let v2 = t.constant(vec![0.0, 3.0]);
                let y = t.weighted_sum(w, &[v0, v1, v2]);
                let a = t.tanh(y);
                t.sum(a)
            },
            1e-5,
        );
        // gradient w.r.t. the summed vectors too
        check_grad(
            &[1.0, 2.0],
            |t, v0| {
                let w = t.constant(vec![0.2, 0.5]);
                let v1 = t.constant(vec![-1.0, 0.5]);
                let y = t.weighted_sum(w, &[v0, v1]);
                t.sum(y)
            },
            1e-5,
        );
    }

    #[test]
    fn grad_gelu_relu_max_const() {
        // stay away from the relu/max kinks
        check_grad(
            &[0.4, -0.9, 1.6, -0.2],
            |t, x| {
                let a = t.gelu(x);
                let b = t.relu(x);
                let c = t.max_const(x, -0.5);
                let s1 = t.sum(a);
                let s2 = t.sum(b);
                let s3 = t.sum(c);
                let partial = t.add(s1, s2);
                t.add(partial, s3)
            },
            1e-4,
        );
    }

    #[test]
    fn grad_reverse_negates_and_scales() {
        let mut tape = Tape::new();
        let x = tape.constant(vec![1.0, -2.0, 3.0]);
        let r = tape.grad_reverse(x, 0.7);
        assert_eq!(tape.value(r), tape.value(x));
        let sq = tape.mul(r, r);
        let loss = tape.sum(sq);
        let grads = tape.backward(loss);
        // d(sum r^2)/dr = 2r, reversed: -0.7 * 2r
        let expect = [-1.4, 2.8, -4.2];
        for (g, e) in grads.wrt(x).iter().zip(expect) {
            assert!((g - e).abs() < 1e-12);
        }
        // scale 0 blocks gradient entirely
        let mut tape = Tape::new();
        let x = tape.constant(vec![1.0, -2.0]);
        let r = tape.grad_reverse(x, 0.0);
        let loss = tape.sum(r);
        let grads = tape.backward(loss);
        assert!(grads.wrt(x).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn params_share_one_node() {
        use crate::params::{ParamGroup, ParamStore};
        let mut store = ParamStore::new();
        let id = store.add("w", ParamGroup::Classifier, vec![2.0, 3.0], (1, 2));
        let mut tape = Tape::new();
        let a = tape.param(&store, id);
        let b = tape.param(&store, id);
        assert_eq!(a, b);
        let prod = tape.mul(a, b); // w^2
        let loss = tape.sum(prod);
        let grads = tape.backward(loss);
        let gw = grads.of_param(id, 2);
        assert!((gw[0] - 4.0).abs() < 1e-12);
        assert!((gw[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn sum_scalars_handles_empty() {
        let mut tape = Tape::new();
        let zero = tape.sum_scalars(&[]);
        assert_eq!(tape.scalar(zero), 0.0);
    }
}
