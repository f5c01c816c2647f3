use super::{Dense, Lstm, NetworkParams, Observation};
use crate::rlcore::DecomposedQRow;
use crate::{Error, Result};

/// One regression example: the taken action's row is pulled towards `target`.
#[derive(Debug, Clone, Copy)]
pub struct TrainSample<'a> {
    pub obs: &'a Observation,
    pub action: usize,
    pub target: &'a [f64],
}

/// `Q⃗(s, ·)` as an `|A|×K` row.
pub fn forward(params: &NetworkParams, obs: &Observation) -> Result<DecomposedQRow> {
    let shape = params.shape();
    DecomposedQRow::new(forward_flat(params, obs)?, shape.n_actions, shape.k)
}

/// Flat `|A|·K` output, action-major.
pub fn forward_flat(params: &NetworkParams, obs: &Observation) -> Result<Vec<f64>> {
    obs.check(params.shape())?;
    let mut trace = Trace::default();
    run(params, obs, &mut trace);
    Ok(trace.head_acts.pop().expect("head has at least one layer"))
}

/// Mean over the batch of `Σ_k (Q_k(s,a) − y_k)²` and its gradient.
pub fn loss_and_gradient(params: &NetworkParams, batch: &[TrainSample<'_>]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidValue("empty training batch".into()));
    }
    let shape = params.shape();
    for s in batch {
        s.obs.check(shape)?;
        if s.action >= shape.n_actions {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: s.action,
                limit: shape.n_actions,
            });
        }
        if s.target.len() != shape.k {
            return Err(Error::LengthMismatch {
                expected: shape.k,
                actual: s.target.len(),
            });
        }
        if s.target.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("training target"));
        }
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    let mut trace = Trace::default();
    let mut dout = vec![0.0; shape.n_actions * shape.k];
    for s in batch {
        run(params, s.obs, &mut trace);
        let out = trace.head_acts.last().expect("output layer");
        dout.iter_mut().for_each(|d| *d = 0.0);
        let row = s.action * shape.k;
        for (k, y) in s.target.iter().enumerate() {
            let e = out[row + k] - y;
            loss += scale * e * e;
            dout[row + k] = 2.0 * scale * e;
        }
        backward(params, s.obs, &trace, &dout, &mut grad);
    }
    Ok((loss, grad))
}

/// Activations kept for the backward pass. Reused between samples.
#[derive(Debug, Default)]
struct Trace {
    /// `static_acts[0]` is the raw input; later entries are post-ReLU.
    static_acts: Vec<Vec<f64>>,
    /// Post-activation gates per step, `4H` each.
    gates: Vec<f64>,
    /// Cell states `c_0..c_T`, `H` each (`c_0 = 0`).
    cells: Vec<f64>,
    /// Hidden states `h_0..h_T`, `H` each (`h_0 = 0`).
    hiddens: Vec<f64>,
    /// `head_acts[0]` is the concatenated encoding; the last entry is the linear output.
    head_acts: Vec<Vec<f64>>,
}

fn dense_forward(p: &[f64], d: &Dense, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(&p[d.b..d.b + d.fan_out]);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &p[d.w + i * d.fan_out..d.w + (i + 1) * d.fan_out];
        for (o, w) in out.iter_mut().zip(row) {
            *o += xi * w;
        }
    }
}

/// Accumulates weight/bias gradients; writes the input gradient into `dx` when given.
fn dense_backward(p: &[f64], d: &Dense, x: &[f64], dy: &[f64], grad: &mut [f64], dx: Option<&mut Vec<f64>>) {
    for (g, dyo) in grad[d.b..d.b + d.fan_out].iter_mut().zip(dy) {
        *g += dyo;
    }
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let g = &mut grad[d.w + i * d.fan_out..d.w + (i + 1) * d.fan_out];
        for (gw, dyo) in g.iter_mut().zip(dy) {
            *gw += xi * dyo;
        }
    }
    if let Some(dx) = dx {
        dx.clear();
        dx.extend((0..d.fan_in).map(|i| {
            let row = &p[d.w + i * d.fan_out..d.w + (i + 1) * d.fan_out];
            row.iter().zip(dy).map(|(w, g)| w * g).sum::<f64>()
        }));
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn lstm_step(p: &[f64], l: &Lstm, x: &[f64], h_prev: &[f64], c_prev: &[f64], gates: &mut [f64], c: &mut [f64], h: &mut [f64]) {
    let n = 4 * l.hidden;
    gates.copy_from_slice(&p[l.b..l.b + n]);
    let inputs = x.iter().chain(h_prev);
    for (j, &v) in inputs.enumerate() {
        if v == 0.0 {
            continue;
        }
        let row = &p[l.w + j * n..l.w + (j + 1) * n];
        for (z, w) in gates.iter_mut().zip(row) {
            *z += v * w;
        }
    }
    let hdim = l.hidden;
    for u in 0..hdim {
        let i = sigmoid(gates[u]);
        let f = sigmoid(gates[hdim + u]);
        let o = sigmoid(gates[2 * hdim + u]);
        let g = gates[3 * hdim + u].tanh();
        gates[u] = i;
        gates[hdim + u] = f;
        gates[2 * hdim + u] = o;
        gates[3 * hdim + u] = g;
        c[u] = f * c_prev[u] + i * g;
        h[u] = o * c[u].tanh();
    }
}

fn run(params: &NetworkParams, obs: &Observation, t: &mut Trace) {
    let layout = params.layout();
    let p = params.values();

    t.static_acts.resize_with(layout.static_layers.len() + 1, Vec::new);
    t.static_acts[0].clear();
    t.static_acts[0].extend_from_slice(obs.static_features());
    for (li, d) in layout.static_layers.iter().enumerate() {
        let (prev, rest) = t.static_acts.split_at_mut(li + 1);
        let out = &mut rest[0];
        dense_forward(p, d, &prev[li], out);
        out.iter_mut().for_each(|v| *v = v.max(0.0));
    }

    let l = layout.lstm;
    let hdim = l.hidden;
    let steps = obs.history_len();
    t.gates.resize(steps * 4 * hdim, 0.0);
    t.cells.clear();
    t.cells.resize((steps + 1) * hdim, 0.0);
    t.hiddens.clear();
    t.hiddens.resize((steps + 1) * hdim, 0.0);
    for s in 0..steps {
        let (c_prev, c_next) = t.cells.split_at_mut((s + 1) * hdim);
        let (h_prev, h_next) = t.hiddens.split_at_mut((s + 1) * hdim);
        lstm_step(
            p,
            &l,
            obs.event(s),
            &h_prev[s * hdim..],
            &c_prev[s * hdim..],
            &mut t.gates[s * 4 * hdim..(s + 1) * 4 * hdim],
            &mut c_next[..hdim],
            &mut h_next[..hdim],
        );
    }

    t.head_acts.resize_with(layout.head_layers.len() + 1, Vec::new);
    let enc = &mut t.head_acts[0];
    enc.clear();
    enc.extend_from_slice(t.static_acts.last().expect("static input"));
    enc.extend_from_slice(&t.hiddens[steps * hdim..]);
    let last = layout.head_layers.len() - 1;
    for (li, d) in layout.head_layers.iter().enumerate() {
        let (prev, rest) = t.head_acts.split_at_mut(li + 1);
        let out = &mut rest[0];
        dense_forward(p, d, &prev[li], out);
        if li < last {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }
}

fn backward(params: &NetworkParams, obs: &Observation, t: &Trace, dout: &[f64], grad: &mut [f64]) {
    let layout = params.layout();
    let p = params.values();

    // Head, last layer first. ReLU derivative uses the stored post-activation.
    let mut dy = dout.to_vec();
    let mut dx = Vec::new();
    for (li, d) in layout.head_layers.iter().enumerate().rev() {
        dense_backward(p, d, &t.head_acts[li], &dy, grad, Some(&mut dx));
        if li > 0 {
            for (g, a) in dx.iter_mut().zip(&t.head_acts[li]) {
                if *a <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        std::mem::swap(&mut dy, &mut dx);
    }
    let static_out = layout.static_out();
    let (d_static, d_hidden) = dy.split_at(static_out);

    let l = layout.lstm;
    let hdim = l.hidden;
    let n = 4 * hdim;
    let steps = obs.history_len();
    let mut dh = d_hidden.to_vec();
    let mut dc = vec![0.0; hdim];
    let mut dz = vec![0.0; n];
    for s in (0..steps).rev() {
        let gates = &t.gates[s * n..(s + 1) * n];
        let c_prev = &t.cells[s * hdim..(s + 1) * hdim];
        let c = &t.cells[(s + 1) * hdim..(s + 2) * hdim];
        let h_prev = &t.hiddens[s * hdim..(s + 1) * hdim];
        for u in 0..hdim {
            let (i, f, o, g) = (gates[u], gates[hdim + u], gates[2 * hdim + u], gates[3 * hdim + u]);
            let tc = c[u].tanh();
            dc[u] += dh[u] * o * (1.0 - tc * tc);
            dz[u] = dc[u] * g * i * (1.0 - i);
            dz[hdim + u] = dc[u] * c_prev[u] * f * (1.0 - f);
            dz[2 * hdim + u] = dh[u] * tc * o * (1.0 - o);
            dz[3 * hdim + u] = dc[u] * i * (1.0 - g * g);
            dc[u] *= f;
        }
        for (gb, z) in grad[l.b..l.b + n].iter_mut().zip(&dz) {
            *gb += z;
        }
        for (j, &v) in obs.event(s).iter().chain(h_prev).enumerate() {
            if v == 0.0 {
                continue;
            }
            for (gw, z) in grad[l.w + j * n..l.w + (j + 1) * n].iter_mut().zip(&dz) {
                *gw += v * z;
            }
        }
        for (u, d) in dh.iter_mut().enumerate() {
            let row = &p[l.w + (l.input + u) * n..l.w + (l.input + u + 1) * n];
            *d = row.iter().zip(&dz).map(|(w, z)| w * z).sum();
        }
    }

    let mut dy = d_static.to_vec();
    for (li, d) in layout.static_layers.iter().enumerate().rev() {
        for (g, a) in dy.iter_mut().zip(&t.static_acts[li + 1]) {
            if *a <= 0.0 {
                *g = 0.0;
            }
        }
        let need_dx = li > 0;
        dense_backward(p, d, &t.static_acts[li], &dy, grad, need_dx.then_some(&mut dx));
        if need_dx {
            std::mem::swap(&mut dy, &mut dx);
        }
    }
}
