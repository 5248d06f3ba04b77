use super::params::{dot, GcnnParams, Layout};
use super::state::{BipartiteState, D_C, D_X};
use super::GnnError;

/// Everything the backward pass needs from a forward call.
///
/// Hidden activations are stored after the rectifier; a unit is active
/// exactly when its stored value is positive. Per-variable buffers after
/// the first pass are only filled for masked variables, since nothing else
/// reaches the outputs.
#[derive(Clone, Debug)]
pub struct ForwardTrace<'s> {
    pub state: &'s BipartiteState,
    pub h: usize,
    xe: Vec<f64>,
    ce: Vec<f64>,
    z1: Vec<f64>,
    s1: Vec<f64>,
    agg1: Vec<f64>,
    fch: Vec<f64>,
    cp: Vec<f64>,
    /// Pre-activations of the second pass, indexed like `state.edges`;
    /// empty rows for edges into unmasked variables.
    z2: Vec<f64>,
    s2: Vec<f64>,
    agg2: Vec<f64>,
    fxh: Vec<f64>,
    xp: Vec<f64>,
    ph: Vec<f64>,
    vh: Vec<f64>,
    deg_c: Vec<f64>,
    deg_x: Vec<f64>,
    pub logits: Vec<f64>,
    pub pi: Vec<f64>,
    pub value: f64,
}

#[inline]
fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Softmax over the masked entries with max subtraction; unmasked entries
/// are exactly zero.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>, GnnError> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(GnnError::EmptyMask);
    }
    let mut pi: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(&l, &m)| if m { (l - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    Ok(pi)
}

/// Terms of the first `g_c` layer that do not depend on both endpoints of
/// an edge: `A_q = W1a xe_q`, `wv = W1b We`, `kv = W1b be + b1`.
struct EdgeParts {
    a: Vec<f64>,
    wv: Vec<f64>,
    kv: Vec<f64>,
}

fn edge_parts(l: &Layout, p: &[f64], xe: &[f64], n: usize) -> EdgeParts {
    let h = l.h;
    let g = l.gc1;
    let mut a = vec![0.0; n * h];
    for q in 0..n {
        let x = &xe[q * h..(q + 1) * h];
        for o in 0..h {
            a[q * h + o] = dot(&g.row(p, o)[..h], x);
        }
    }
    let we = &p[l.edge.w..l.edge.w + h];
    let be = &p[l.edge.b..l.edge.b + h];
    let mut wv = vec![0.0; h];
    let mut kv = vec![0.0; h];
    for o in 0..h {
        let w1b = &g.row(p, o)[h..2 * h];
        wv[o] = dot(w1b, we);
        kv[o] = dot(w1b, be) + p[g.b + o];
    }
    EdgeParts { a, wv, kv }
}

/// `W1c y` for each row of `ys`.
fn con_part(l: &Layout, p: &[f64], ys: &[f64], m: usize) -> Vec<f64> {
    let h = l.h;
    let mut out = vec![0.0; m * h];
    for r in 0..m {
        let y = &ys[r * h..(r + 1) * h];
        for o in 0..h {
            out[r * h + o] = dot(&l.gc1.row(p, o)[2 * h..], y);
        }
    }
    out
}

/// Policy over the masked variables and the masked-sum value of `state`.
pub fn gcnn_forward<'s>(
    state: &'s BipartiteState,
    params: &GcnnParams,
) -> Result<(Vec<f64>, f64, ForwardTrace<'s>), GnnError> {
    let trace = forward_trace(state, params)?;
    Ok((trace.pi.clone(), trace.value, trace))
}

pub fn forward_trace<'s>(state: &'s BipartiteState, params: &GcnnParams) -> Result<ForwardTrace<'s>, GnnError> {
    let (n, m) = (state.n, state.m);
    if state.x.len() != n * D_X || state.c.len() != m * D_C || state.mask.len() != n {
        return Err(GnnError::ShapeMismatch { expected: n * D_X, got: state.x.len() });
    }
    if !state.mask.iter().any(|&b| b) {
        return Err(GnnError::EmptyMask);
    }
    let l = &params.layout;
    let p = &params.data[..];
    let h = l.h;
    let ne = state.edges.len();

    let mut xe = vec![0.0; n * h];
    for q in 0..n {
        l.emb_x.forward(p, state.var(q), &mut xe[q * h..(q + 1) * h]);
    }
    relu_in_place(&mut xe);
    let mut ce = vec![0.0; m * h];
    for r in 0..m {
        l.emb_c.forward(p, state.con(r), &mut ce[r * h..(r + 1) * h]);
    }
    relu_in_place(&mut ce);

    let parts = edge_parts(l, p, &xe, n);
    let mut deg_c = vec![0.0; m];
    let mut deg_x = vec![0.0; n];
    for &(r, q, _) in &state.edges {
        deg_c[r] += 1.0;
        deg_x[q] += 1.0;
    }

    // Pass 1: variables to constraints.
    let b1 = con_part(l, p, &ce, m);
    let mut z1 = vec![0.0; ne * h];
    let mut s1 = vec![0.0; m * h];
    for (k, &(r, q, e)) in state.edges.iter().enumerate() {
        let z = &mut z1[k * h..(k + 1) * h];
        let s = &mut s1[r * h..(r + 1) * h];
        for o in 0..h {
            let v = parts.a[q * h + o] + b1[r * h + o] + e * parts.wv[o] + parts.kv[o];
            z[o] = v;
            if v > 0.0 {
                s[o] += v;
            }
        }
    }
    let mut agg1 = vec![0.0; m * h];
    let mut fch = vec![0.0; m * h];
    let mut cp = vec![0.0; m * h];
    let mut cat = vec![0.0; 2 * h];
    for r in 0..m {
        let agg = &mut agg1[r * h..(r + 1) * h];
        l.gc2.forward(p, &s1[r * h..(r + 1) * h], agg);
        // The second layer of g_c is affine, so summing it over edges adds
        // the bias once per edge.
        for o in 0..h {
            agg[o] += (deg_c[r] - 1.0) * p[l.gc2.b + o];
        }
        cat[..h].copy_from_slice(&ce[r * h..(r + 1) * h]);
        cat[h..].copy_from_slice(agg);
        let hid = &mut fch[r * h..(r + 1) * h];
        l.fc1.forward(p, &cat, hid);
        relu_in_place(hid);
        l.fc2.forward(p, hid, &mut cp[r * h..(r + 1) * h]);
    }

    // Pass 2: constraints to (masked) variables.
    let b2 = con_part(l, p, &cp, m);
    let mut z2 = vec![0.0; ne * h];
    let mut s2 = vec![0.0; n * h];
    for (k, &(r, q, e)) in state.edges.iter().enumerate() {
        if !state.mask[q] {
            continue;
        }
        let z = &mut z2[k * h..(k + 1) * h];
        let s = &mut s2[q * h..(q + 1) * h];
        for o in 0..h {
            let v = parts.a[q * h + o] + b2[r * h + o] + e * parts.wv[o] + parts.kv[o];
            z[o] = v;
            if v > 0.0 {
                s[o] += v;
            }
        }
    }
    let mut agg2 = vec![0.0; n * h];
    let mut fxh = vec![0.0; n * h];
    let mut xp = vec![0.0; n * h];
    let mut ph = vec![0.0; n * h];
    let mut vh = vec![0.0; n * h];
    let mut logits = vec![0.0; n];
    let mut value = 0.0;
    let mut out1 = [0.0];
    for q in 0..n {
        if !state.mask[q] {
            continue;
        }
        let rng = q * h..(q + 1) * h;
        let agg = &mut agg2[rng.clone()];
        l.gc2.forward(p, &s2[rng.clone()], agg);
        for o in 0..h {
            agg[o] += (deg_x[q] - 1.0) * p[l.gc2.b + o];
        }
        cat[..h].copy_from_slice(&xe[rng.clone()]);
        cat[h..].copy_from_slice(agg);
        let hid = &mut fxh[rng.clone()];
        l.fx1.forward(p, &cat, hid);
        relu_in_place(hid);
        l.fx2.forward(p, hid, &mut xp[rng.clone()]);

        let x = &xp[rng.clone()];
        let hp = &mut ph[rng.clone()];
        l.p1.forward(p, x, hp);
        relu_in_place(hp);
        l.p2.forward(p, hp, &mut out1);
        logits[q] = out1[0];

        let hv = &mut vh[rng.clone()];
        l.v1.forward(p, x, hv);
        relu_in_place(hv);
        l.v2.forward(p, hv, &mut out1);
        value += out1[0];
    }
    let pi = masked_softmax(&logits, &state.mask)?;

    Ok(ForwardTrace {
        state,
        h,
        xe,
        ce,
        z1,
        s1,
        agg1,
        fch,
        cp,
        z2,
        s2,
        agg2,
        fxh,
        xp,
        ph,
        vh,
        deg_c,
        deg_x,
        logits,
        pi,
        value,
    })
}

/// Gradient of `dpi . pi + dv * V` with respect to every parameter.
pub fn gcnn_backward(
    params: &GcnnParams,
    trace: &ForwardTrace<'_>,
    dpi: &[f64],
    dv: f64,
) -> Result<GcnnParams, GnnError> {
    let state = trace.state;
    let (n, m) = (state.n, state.m);
    if dpi.len() != n {
        return Err(GnnError::ShapeMismatch { expected: n, got: dpi.len() });
    }
    if trace.h != params.h() {
        return Err(GnnError::ShapeMismatch { expected: params.h(), got: trace.h });
    }
    let l = &params.layout;
    let p = &params.data[..];
    let h = l.h;
    let mut grad = params.zeros_like();
    let g = &mut grad.data[..];

    // Masked softmax: dlogit_q = pi_q (dpi_q - sum_k pi_k dpi_k).
    let mean: f64 = trace.pi.iter().zip(dpi).map(|(a, b)| a * b).sum();
    let mut dxp = vec![0.0; n * h];
    let mut dxe = vec![0.0; n * h];
    let mut da = vec![0.0; n * h];
    let mut dagg2 = vec![0.0; n * h];
    let mut dhid = vec![0.0; h];
    let mut dcat = vec![0.0; 2 * h];
    let mut cat = vec![0.0; 2 * h];
    let mut ds = vec![0.0; h];
    for q in 0..n {
        if !state.mask[q] {
            continue;
        }
        let rng = q * h..(q + 1) * h;
        let dlogit = trace.pi[q] * (dpi[q] - mean);
        let x = &trace.xp[rng.clone()];
        let dx = &mut dxp[rng.clone()];

        let hp = &trace.ph[rng.clone()];
        dhid.iter_mut().for_each(|v| *v = 0.0);
        l.p2.backward(p, g, hp, &[dlogit], Some(&mut dhid));
        gate(&mut dhid, hp);
        l.p1.backward(p, g, x, &dhid, Some(&mut *dx));

        let hv = &trace.vh[rng.clone()];
        dhid.iter_mut().for_each(|v| *v = 0.0);
        l.v2.backward(p, g, hv, &[dv], Some(&mut dhid));
        gate(&mut dhid, hv);
        l.v1.backward(p, g, x, &dhid, Some(&mut *dx));

        // f_x
        let fh = &trace.fxh[rng.clone()];
        dhid.iter_mut().for_each(|v| *v = 0.0);
        l.fx2.backward(p, g, fh, dx, Some(&mut dhid));
        gate(&mut dhid, fh);
        cat[..h].copy_from_slice(&trace.xe[rng.clone()]);
        cat[h..].copy_from_slice(&trace.agg2[rng.clone()]);
        dcat.iter_mut().for_each(|v| *v = 0.0);
        l.fx1.backward(p, g, &cat, &dhid, Some(&mut dcat));
        for o in 0..h {
            dxe[q * h + o] += dcat[o];
        }
        dagg2[rng.clone()].copy_from_slice(&dcat[h..]);
        let deg = trace.deg_x[q];
        for o in 0..h {
            g[l.gc2.b + o] += (deg - 1.0) * dcat[h + o];
        }
    }

    // Second layer of g_c in pass 2: dS2_q = W2^T dagg2_q.
    let mut ds2 = vec![0.0; n * h];
    for q in 0..n {
        if !state.mask[q] {
            continue;
        }
        let rng = q * h..(q + 1) * h;
        ds.iter_mut().for_each(|v| *v = 0.0);
        l.gc2.backward(p, g, &trace.s2[rng.clone()], &dagg2[rng.clone()], Some(&mut ds));
        ds2[rng].copy_from_slice(&ds);
    }

    let mut dwv = vec![0.0; h];
    let mut dkv = vec![0.0; h];
    let mut db2 = vec![0.0; m * h];
    for (k, &(r, q, e)) in state.edges.iter().enumerate() {
        if !state.mask[q] {
            continue;
        }
        let z = &trace.z2[k * h..(k + 1) * h];
        for o in 0..h {
            if z[o] > 0.0 {
                let d = ds2[q * h + o];
                da[q * h + o] += d;
                db2[r * h + o] += d;
                dwv[o] += e * d;
                dkv[o] += d;
            }
        }
    }
    // B2_r = W1c c'_r
    let mut dcp = vec![0.0; m * h];
    con_part_backward(l, p, g, &trace.cp, &db2, &mut dcp, m);

    // f_c and the second layer of g_c in pass 1.
    let mut dce = vec![0.0; m * h];
    let mut ds1 = vec![0.0; m * h];
    for r in 0..m {
        let rng = r * h..(r + 1) * h;
        let fh = &trace.fch[rng.clone()];
        dhid.iter_mut().for_each(|v| *v = 0.0);
        l.fc2.backward(p, g, fh, &dcp[rng.clone()], Some(&mut dhid));
        gate(&mut dhid, fh);
        cat[..h].copy_from_slice(&trace.ce[rng.clone()]);
        cat[h..].copy_from_slice(&trace.agg1[rng.clone()]);
        dcat.iter_mut().for_each(|v| *v = 0.0);
        l.fc1.backward(p, g, &cat, &dhid, Some(&mut dcat));
        dce[rng.clone()].copy_from_slice(&dcat[..h]);
        let deg = trace.deg_c[r];
        for o in 0..h {
            g[l.gc2.b + o] += (deg - 1.0) * dcat[h + o];
        }
        ds.iter_mut().for_each(|v| *v = 0.0);
        l.gc2.backward(p, g, &trace.s1[rng.clone()], &dcat[h..], Some(&mut ds));
        ds1[rng].copy_from_slice(&ds);
    }

    let mut db1 = vec![0.0; m * h];
    for (k, &(r, q, e)) in state.edges.iter().enumerate() {
        let z = &trace.z1[k * h..(k + 1) * h];
        for o in 0..h {
            if z[o] > 0.0 {
                let d = ds1[r * h + o];
                da[q * h + o] += d;
                db1[r * h + o] += d;
                dwv[o] += e * d;
                dkv[o] += d;
            }
        }
    }
    con_part_backward(l, p, g, &trace.ce, &db1, &mut dce, m);

    // A_q = W1a xe_q
    let gc1 = l.gc1;
    for q in 0..n {
        let x = &trace.xe[q * h..(q + 1) * h];
        for o in 0..h {
            let d = da[q * h + o];
            if d == 0.0 {
                continue;
            }
            let base = gc1.w + o * gc1.inp;
            for i in 0..h {
                g[base + i] += d * x[i];
                dxe[q * h + i] += d * p[base + i];
            }
        }
    }
    // wv = W1b We, kv = W1b be + b1
    let we = l.edge.w;
    let be = l.edge.b;
    for o in 0..h {
        g[gc1.b + o] += dkv[o];
        let base = gc1.w + o * gc1.inp + h;
        for i in 0..h {
            g[base + i] += dwv[o] * p[we + i] + dkv[o] * p[be + i];
            g[we + i] += dwv[o] * p[base + i];
            g[be + i] += dkv[o] * p[base + i];
        }
    }

    // Embeddings.
    for q in 0..n {
        let rng = q * h..(q + 1) * h;
        let d = &mut dxe[rng.clone()];
        gate(d, &trace.xe[rng]);
        l.emb_x.backward(p, g, state.var(q), d, None);
    }
    for r in 0..m {
        let rng = r * h..(r + 1) * h;
        let d = &mut dce[rng.clone()];
        gate(d, &trace.ce[rng]);
        l.emb_c.backward(p, g, state.con(r), d, None);
    }
    Ok(grad)
}

/// Zeroes gradient entries of inactive rectifier units.
#[inline]
fn gate(d: &mut [f64], post: &[f64]) {
    for (di, &a) in d.iter_mut().zip(post) {
        if a <= 0.0 {
            *di = 0.0;
        }
    }
}

/// Backward of `out_r = W1c y_r`: weight gradient and `dy += W1c^T dout`.
fn con_part_backward(l: &Layout, p: &[f64], g: &mut [f64], ys: &[f64], dout: &[f64], dy: &mut [f64], m: usize) {
    let h = l.h;
    let gc1 = l.gc1;
    for r in 0..m {
        let y = &ys[r * h..(r + 1) * h];
        for o in 0..h {
            let d = dout[r * h + o];
            if d == 0.0 {
                continue;
            }
            let base = gc1.w + o * gc1.inp + 2 * h;
            for i in 0..h {
                g[base + i] += d * y[i];
                dy[r * h + i] += d * p[base + i];
            }
        }
    }
}

impl ForwardTrace<'_> {
    /// Which rectifier units were active. Two forward passes with equal
    /// patterns lie on the same linear piece of the network.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let mask = &self.state.mask;
        let h = self.h;
        let mut out: Vec<bool> = self
            .xe
            .iter()
            .chain(&self.ce)
            .chain(&self.z1)
            .chain(&self.fch)
            .map(|&v| v > 0.0)
            .collect();
        for (k, &(_, q, _)) in self.state.edges.iter().enumerate() {
            if mask[q] {
                out.extend(self.z2[k * h..(k + 1) * h].iter().map(|&v| v > 0.0));
            }
        }
        for q in (0..self.state.n).filter(|&q| mask[q]) {
            let rng = q * h..(q + 1) * h;
            for buf in [&self.fxh, &self.ph, &self.vh] {
                out.extend(buf[rng.clone()].iter().map(|&v| v > 0.0));
            }
        }
        out
    }
}
