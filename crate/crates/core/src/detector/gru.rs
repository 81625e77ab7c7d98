//! Gated recurrent unit over per-event feature rows, with exact
//! backpropagation through time. Everything is plain `f64` row-major
//! storage; sequences are short and models are small, so clarity wins over
//! BLAS.

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-major matrix-vector product: y = A x, A is rows x cols.
fn matvec(a: &[f64], rows: usize, cols: usize, x: &[f64], y: &mut [f64]) {
    for r in 0..rows {
        let row = &a[r * cols..(r + 1) * cols];
        y[r] = row.iter().zip(x).map(|(w, v)| w * v).sum();
    }
}

/// Rank-1 accumulation: A += g xᵀ.
fn outer_add(a: &mut [f64], rows: usize, cols: usize, g: &[f64], x: &[f64]) {
    for r in 0..rows {
        let row = &mut a[r * cols..(r + 1) * cols];
        let gr = g[r];
        for (w, v) in row.iter_mut().zip(x) {
            *w += gr * v;
        }
    }
}

/// Transposed product accumulation: y += Aᵀ g.
fn matvec_t_add(a: &[f64], rows: usize, cols: usize, g: &[f64], y: &mut [f64]) {
    for r in 0..rows {
        let row = &a[r * cols..(r + 1) * cols];
        let gr = g[r];
        for (yv, w) in y.iter_mut().zip(row) {
            *yv += gr * w;
        }
    }
}

/// GRU parameters. Update gate z, reset gate r, candidate state:
///   z_t = sigma(W_z x_t + U_z h_{t-1} + b_z)
///   r_t = sigma(W_r x_t + U_r h_{t-1} + b_r)
///   c_t = tanh(W_h x_t + U_h (r_t * h_{t-1}) + b_h)
///   h_t = (1 - z_t) * h_{t-1} + z_t * c_t
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Gru {
    pub hidden: usize,
    pub input: usize,
    pub w_z: Vec<f64>,
    pub u_z: Vec<f64>,
    pub b_z: Vec<f64>,
    pub w_r: Vec<f64>,
    pub u_r: Vec<f64>,
    pub b_r: Vec<f64>,
    pub w_h: Vec<f64>,
    pub u_h: Vec<f64>,
    pub b_h: Vec<f64>,
}

fn xavier(rows: usize, cols: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    (0..rows * cols).map(|_| (2.0 * rng.next_f64() - 1.0) * limit).collect()
}

impl Gru {
    pub fn init(input: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        Gru {
            hidden,
            input,
            w_z: xavier(hidden, input, rng),
            u_z: xavier(hidden, hidden, rng),
            b_z: vec![0.0; hidden],
            w_r: xavier(hidden, input, rng),
            u_r: xavier(hidden, hidden, rng),
            b_r: vec![0.0; hidden],
            w_h: xavier(hidden, input, rng),
            u_h: xavier(hidden, hidden, rng),
            b_h: vec![0.0; hidden],
        }
    }

    pub fn n_params(&self) -> usize {
        3 * (self.hidden * self.input + self.hidden * self.hidden + self.hidden)
    }

    /// Run the sequence, returning the step tape needed for backprop.
    pub fn forward(&self, xs: &[Vec<f64>]) -> GruTape {
        let h = self.hidden;
        let mut tape = GruTape {
            z: Vec::with_capacity(xs.len()),
            r: Vec::with_capacity(xs.len()),
            c: Vec::with_capacity(xs.len()),
            state: Vec::with_capacity(xs.len() + 1),
        };
        tape.state.push(vec![0.0; h]);
        let mut buf_a = vec![0.0; h];
        let mut buf_b = vec![0.0; h];
        for x in xs {
            let prev = tape.state.last().unwrap().clone();

            matvec(&self.w_z, h, self.input, x, &mut buf_a);
            matvec(&self.u_z, h, h, &prev, &mut buf_b);
            let z: Vec<f64> =
                (0..h).map(|i| sigmoid(buf_a[i] + buf_b[i] + self.b_z[i])).collect();

            matvec(&self.w_r, h, self.input, x, &mut buf_a);
            matvec(&self.u_r, h, h, &prev, &mut buf_b);
            let r: Vec<f64> =
                (0..h).map(|i| sigmoid(buf_a[i] + buf_b[i] + self.b_r[i])).collect();

            let gated: Vec<f64> = (0..h).map(|i| r[i] * prev[i]).collect();
            matvec(&self.w_h, h, self.input, x, &mut buf_a);
            matvec(&self.u_h, h, h, &gated, &mut buf_b);
            let c: Vec<f64> = (0..h).map(|i| (buf_a[i] + buf_b[i] + self.b_h[i]).tanh()).collect();

            let state: Vec<f64> = (0..h).map(|i| (1.0 - z[i]) * prev[i] + z[i] * c[i]).collect();
            tape.z.push(z);
            tape.r.push(r);
            tape.c.push(c);
            tape.state.push(state);
        }
        tape
    }

    /// Backprop a gradient on the final hidden state through the sequence,
    /// accumulating parameter gradients into `grads`.
    pub fn backward(&self, xs: &[Vec<f64>], tape: &GruTape, d_last: &[f64], grads: &mut Gru) {
        let h = self.hidden;
        let mut dh = d_last.to_vec();
        for t in (0..xs.len()).rev() {
            let prev = &tape.state[t];
            let z = &tape.z[t];
            let r = &tape.r[t];
            let c = &tape.c[t];
            let x = &xs[t];

            let dz: Vec<f64> = (0..h).map(|i| dh[i] * (c[i] - prev[i])).collect();
            let dc: Vec<f64> = (0..h).map(|i| dh[i] * z[i]).collect();
            let mut dprev: Vec<f64> = (0..h).map(|i| dh[i] * (1.0 - z[i])).collect();

            // candidate: a_h = W_h x + U_h (r*prev) + b_h
            let da_h: Vec<f64> = (0..h).map(|i| dc[i] * (1.0 - c[i] * c[i])).collect();
            let gated: Vec<f64> = (0..h).map(|i| r[i] * prev[i]).collect();
            outer_add(&mut grads.w_h, h, self.input, &da_h, x);
            outer_add(&mut grads.u_h, h, h, &da_h, &gated);
            for i in 0..h {
                grads.b_h[i] += da_h[i];
            }
            let mut dgated = vec![0.0; h];
            matvec_t_add(&self.u_h, h, h, &da_h, &mut dgated);
            let dr: Vec<f64> = (0..h).map(|i| dgated[i] * prev[i]).collect();
            for i in 0..h {
                dprev[i] += dgated[i] * r[i];
            }

            let da_z: Vec<f64> = (0..h).map(|i| dz[i] * z[i] * (1.0 - z[i])).collect();
            outer_add(&mut grads.w_z, h, self.input, &da_z, x);
            outer_add(&mut grads.u_z, h, h, &da_z, prev);
            for i in 0..h {
                grads.b_z[i] += da_z[i];
            }
            matvec_t_add(&self.u_z, h, h, &da_z, &mut dprev);

            let da_r: Vec<f64> = (0..h).map(|i| dr[i] * r[i] * (1.0 - r[i])).collect();
            outer_add(&mut grads.w_r, h, self.input, &da_r, x);
            outer_add(&mut grads.u_r, h, h, &da_r, prev);
            for i in 0..h {
                grads.b_r[i] += da_r[i];
            }
            matvec_t_add(&self.u_r, h, h, &da_r, &mut dprev);

            dh = dprev;
        }
    }

    pub fn zeros_like(&self) -> Gru {
        Gru {
            hidden: self.hidden,
            input: self.input,
            w_z: vec![0.0; self.w_z.len()],
            u_z: vec![0.0; self.u_z.len()],
            b_z: vec![0.0; self.b_z.len()],
            w_r: vec![0.0; self.w_r.len()],
            u_r: vec![0.0; self.u_r.len()],
            b_r: vec![0.0; self.b_r.len()],
            w_h: vec![0.0; self.w_h.len()],
            u_h: vec![0.0; self.u_h.len()],
            b_h: vec![0.0; self.b_h.len()],
        }
    }

    pub fn tensors(&self) -> [(&'static str, &Vec<f64>, usize, usize); 9] {
        let (h, m) = (self.hidden, self.input);
        [
            ("w_z", &self.w_z, h, m),
            ("u_z", &self.u_z, h, h),
            ("b_z", &self.b_z, 1, h),
            ("w_r", &self.w_r, h, m),
            ("u_r", &self.u_r, h, h),
            ("b_r", &self.b_r, 1, h),
            ("w_h", &self.w_h, h, m),
            ("u_h", &self.u_h, h, h),
            ("b_h", &self.b_h, 1, h),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 9] {
        [
            &mut self.w_z,
            &mut self.u_z,
            &mut self.b_z,
            &mut self.w_r,
            &mut self.u_r,
            &mut self.b_r,
            &mut self.w_h,
            &mut self.u_h,
            &mut self.b_h,
        ]
    }
}

pub struct GruTape {
    pub z: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    /// state[0] is the zero initial state; state[t+1] is h_t.
    pub state: Vec<Vec<f64>>,
}

impl GruTape {
    pub fn last_state(&self) -> &[f64] {
        self.state.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_deterministic_and_bounded() {
        let mut rng = SplitMix64::new(4);
        let gru = Gru::init(3, 5, &mut rng);
        let xs: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..3).map(|_| rng.next_normal()).collect())
            .collect();
        let a = gru.forward(&xs);
        let b = gru.forward(&xs);
        assert_eq!(a.last_state(), b.last_state());
        for v in a.last_state() {
            assert!(v.abs() <= 1.0, "hidden state should stay in (-1, 1)");
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        // Loss = sum of final hidden state; checks the BPTT chain alone.
        let mut rng = SplitMix64::new(12);
        let mut gru = Gru::init(2, 3, &mut rng);
        let xs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..2).map(|_| rng.next_normal()).collect())
            .collect();

        let tape = gru.forward(&xs);
        let mut grads = gru.zeros_like();
        gru.backward(&xs, &tape, &vec![1.0; 3], &mut grads);

        let eps = 1e-6;
        let loss = |g: &Gru| g.forward(&xs).last_state().iter().sum::<f64>();
        for (ti, tensor_len) in [
            gru.w_z.len(),
            gru.u_z.len(),
            gru.b_z.len(),
            gru.w_r.len(),
            gru.u_r.len(),
            gru.b_r.len(),
            gru.w_h.len(),
            gru.u_h.len(),
            gru.b_h.len(),
        ]
        .iter()
        .enumerate()
        {
            for idx in 0..*tensor_len {
                let orig = gru.tensors_mut()[ti][idx];
                gru.tensors_mut()[ti][idx] = orig + eps;
                let up = loss(&gru);
                gru.tensors_mut()[ti][idx] = orig - eps;
                let down = loss(&gru);
                gru.tensors_mut()[ti][idx] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = {
                    let gs = grads.tensors();
                    gs[ti].1[idx]
                };
                assert!(
                    (numeric - analytic).abs() < 1e-6 * (1.0 + numeric.abs()),
                    "tensor {ti} idx {idx}: numeric {numeric} analytic {analytic}"
                );
            }
        }
    }
}
