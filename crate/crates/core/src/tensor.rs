//! Dense `f64` tensors and a reverse-mode differentiation tape.
//!
//! A [`Graph`] records every primitive executed during a forward pass.
//! [`Graph::backward`] replays the record in reverse, accumulating adjoints
//! into every leaf that was registered with `requires_grad`, and then clears
//! the record so the graph can be reused for the next sample.
//!
//! Only the operations the detector needs are provided. Broadcasting is
//! limited to two cases: a right operand whose shape is a suffix of the left
//! operand's shape (`add`), and a rank-2 operand on either side of a batched
//! `matmul`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("non-finite value encountered in {0}")]
    Numeric(&'static str),
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Row-major dense array of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(TensorError::Shape(format!(
                "dimensions must be positive, got {shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(TensorError::Shape(format!(
                "shape {shape:?} holds {numel} elements but data has {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let numel = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; numel],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    /// A rank-1 tensor wrapping `data`.
    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len().max(1)],
            data: if data.is_empty() { vec![0.0] } else { data },
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn last_dim(&self) -> usize {
        *self.shape.last().expect("tensor rank >= 1")
    }
}

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MatMul(Var, Var),
    Transpose(Var),
    Reshape(Var),
    Concat(Vec<Var>, usize),
    MaxLeading(Var, Vec<usize>),
    SumLeading(Var),
    Sum(Var),
    Mean(Var),
    Log(Var, f64),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Gelu(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
    requires_grad: bool,
}

/// Adjoints of the leaves that were registered with `requires_grad`.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    grads: BTreeMap<Var, Tensor>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(&var)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &Tensor)> {
        self.grads.iter().map(|(v, t)| (*v, t))
    }
}

/// Computation record for one forward pass.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Registers a leaf. Leaves with `requires_grad` receive gradients.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: requires_grad,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Elementwise sum. `b` may be broadcast when its shape is a suffix of `a`'s.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if !is_suffix(sb, sa) {
            return Err(TensorError::Shape(format!("add: {sb:?} does not broadcast onto {sa:?}")));
        }
        let av = self.value(a);
        let bv = self.value(b).data();
        let mut out = av.data.clone();
        for chunk in out.chunks_mut(bv.len()) {
            for (o, x) in chunk.iter_mut().zip(bv) {
                *o += x;
            }
        }
        let value = Tensor {
            shape: av.shape.clone(),
            data: out,
        };
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    /// Elementwise (Hadamard) product of equally shaped tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::Shape(format!(
                "mul: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        let (av, bv) = (self.value(a), self.value(b));
        let data = av.data.iter().zip(&bv.data).map(|(x, y)| x * y).collect();
        let value = Tensor {
            shape: av.shape.clone(),
            data,
        };
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let av = self.value(a);
        let value = Tensor {
            shape: av.shape.clone(),
            data: av.data.iter().map(|x| x * factor).collect(),
        };
        self.push(value, Op::Scale(a, factor), &[a])
    }

    /// Batched matrix product over the last two dimensions.
    ///
    /// Leading (batch) dimensions must agree, or one operand must be rank 2,
    /// in which case it is shared across the other operand's batch.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let geo = MatMulGeometry::new(self.shape(a), self.shape(b))?;
        let mut out = vec![0.0; geo.batch * geo.m * geo.n];
        let (ad, bd) = (self.value(a).data(), self.value(b).data());
        for bi in 0..geo.batch {
            let (ao, bo, oo) = geo.offsets(bi);
            mm_acc(
                &ad[ao..ao + geo.m * geo.k],
                &bd[bo..bo + geo.k * geo.n],
                &mut out[oo..oo + geo.m * geo.n],
                geo.m,
                geo.k,
                geo.n,
            );
        }
        let value = Tensor {
            shape: geo.out_shape.clone(),
            data: out,
        };
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    /// Swaps the last two dimensions.
    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let r = av.shape.len();
        if r < 2 {
            return Err(TensorError::Shape(format!("transpose needs rank >= 2, got {:?}", av.shape)));
        }
        let (rows, cols) = (av.shape[r - 2], av.shape[r - 1]);
        let mut shape = av.shape.clone();
        shape.swap(r - 2, r - 1);
        let data = transpose_batched(&av.data, rows, cols);
        Ok(self.push(Tensor { shape, data }, Op::Transpose(a), &[a]))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let av = self.value(a);
        let value = Tensor::new(shape.to_vec(), av.data.clone())
            .map_err(|_| TensorError::Shape(format!("reshape {:?} -> {shape:?}", av.shape)))?;
        Ok(self.push(value, Op::Reshape(a), &[a]))
    }

    /// Concatenates along `axis`; all other dimensions must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::Contract("concat of zero tensors".into()))?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(TensorError::Shape(format!("concat axis {axis} out of range for {base:?}")));
        }
        let mut total = 0;
        for p in parts {
            let s = self.shape(*p);
            let agree = s.len() == base.len()
                && s.iter().zip(&base).enumerate().all(|(i, (x, y))| i == axis || x == y);
            if !agree {
                return Err(TensorError::Shape(format!("concat: {s:?} vs {base:?} on axis {axis}")));
            }
            total += s[axis];
        }
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for p in parts {
                let pv = self.value(*p);
                let chunk = pv.shape[axis] * inner;
                data.extend_from_slice(&pv.data[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = base;
        shape[axis] = total;
        Ok(self.push(Tensor { shape, data }, Op::Concat(parts.to_vec(), axis), parts))
    }

    /// Elementwise maximum across the leading axis. The gradient is routed to
    /// the arg-max slice; the first index wins ties.
    pub fn max_leading(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        if av.shape.len() < 2 {
            return Err(TensorError::Shape(format!("max_leading needs rank >= 2, got {:?}", av.shape)));
        }
        let lead = av.shape[0];
        let rest = av.len() / lead;
        let mut out = av.data[..rest].to_vec();
        let mut arg = vec![0usize; rest];
        for s in 1..lead {
            let slice = &av.data[s * rest..(s + 1) * rest];
            for ((o, ai), &x) in out.iter_mut().zip(arg.iter_mut()).zip(slice) {
                if x > *o {
                    *o = x;
                    *ai = s;
                }
            }
        }
        let value = Tensor {
            shape: av.shape[1..].to_vec(),
            data: out,
        };
        Ok(self.push(value, Op::MaxLeading(a, arg), &[a]))
    }

    /// Sum across the leading axis.
    pub fn sum_leading(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        if av.shape.len() < 2 {
            return Err(TensorError::Shape(format!("sum_leading needs rank >= 2, got {:?}", av.shape)));
        }
        let rest = av.len() / av.shape[0];
        let mut out = vec![0.0; rest];
        for chunk in av.data.chunks(rest) {
            for (o, x) in out.iter_mut().zip(chunk) {
                *o += x;
            }
        }
        let value = Tensor {
            shape: av.shape[1..].to_vec(),
            data: out,
        };
        Ok(self.push(value, Op::SumLeading(a), &[a]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let s = av.data.iter().sum::<f64>() / av.len() as f64;
        self.push(Tensor::scalar(s), Op::Mean(a), &[a])
    }

    /// Natural logarithm.
    pub fn log(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        if av.data.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(TensorError::Numeric("log"));
        }
        self.log_clamped(a, 0.0)
    }

    /// `ln(max(x, floor))`; the gradient is zero where the clamp is active.
    pub fn log_clamped(&mut self, a: Var, floor: f64) -> Result<Var> {
        let av = self.value(a);
        let data: Vec<f64> = av.data.iter().map(|&x| x.max(floor).ln()).collect();
        if data.iter().any(|x| x.is_nan()) {
            return Err(TensorError::Numeric("log"));
        }
        let value = Tensor {
            shape: av.shape.clone(),
            data,
        };
        Ok(self.push(value, Op::Log(a, floor), &[a]))
    }

    /// Softmax over the last dimension with max subtraction.
    pub fn softmax_lastdim(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        if !av.is_finite() {
            return Err(TensorError::Numeric("softmax"));
        }
        let d = av.last_dim();
        let mut data = av.data.clone();
        for row in data.chunks_mut(d) {
            softmax_in_place(row);
        }
        let value = Tensor {
            shape: av.shape.clone(),
            data,
        };
        Ok(self.push(value, Op::Softmax(a), &[a]))
    }

    /// Layer normalization over the last dimension followed by an affine map.
    pub fn layernorm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let d = self.value(x).last_dim();
        if self.shape(gain) != [d] || self.shape(bias) != [d] {
            return Err(TensorError::Shape(format!(
                "layernorm over {d} features with gain {:?} and bias {:?}",
                self.shape(gain),
                self.shape(bias)
            )));
        }
        let xv = self.value(x);
        let (gv, bv) = (self.value(gain).data(), self.value(bias).data());
        let rows = xv.len() / d;
        let mut out = vec![0.0; xv.len()];
        let mut xhat = vec![0.0; xv.len()];
        let mut inv_std = vec![0.0; rows];
        for r in 0..rows {
            let row = &xv.data[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let istd = 1.0 / (var + eps).sqrt();
            inv_std[r] = istd;
            for j in 0..d {
                let h = (row[j] - mean) * istd;
                xhat[r * d + j] = h;
                out[r * d + j] = h * gv[j] + bv[j];
            }
        }
        let value = Tensor {
            shape: xv.shape.clone(),
            data: out,
        };
        let needs = [x, gain, bias].iter().any(|p| self.nodes[p.0].needs_grad);
        let op = Op::LayerNorm {
            x,
            gain,
            bias,
            xhat: if needs { xhat } else { Vec::new() },
            inv_std: if needs { inv_std } else { Vec::new() },
        };
        Ok(self.push(value, op, &[x, gain, bias]))
    }

    /// GELU in its exact form, `x * Phi(x)`.
    pub fn gelu(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let value = Tensor {
            shape: av.shape.clone(),
            data: av.data.iter().map(|&x| x * std_normal_cdf(x)).collect(),
        };
        self.push(value, Op::Gelu(a), &[a])
    }

    /// Dense layer `x . w + b` with `w: [in, out]` and `b: [out]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let y = self.matmul(x, w)?;
        self.add(y, b)
    }

    /// Reverse pass from a scalar `loss`. Returns gradients for every leaf
    /// registered with `requires_grad` and clears the record.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.nodes.is_empty() {
            return Err(TensorError::Contract("backward on an empty record".into()));
        }
        if self.value(loss).len() != 1 {
            return Err(TensorError::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::default();
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            if node.requires_grad {
                out.grads.insert(
                    Var(i),
                    Tensor {
                        shape: node.value.shape.clone(),
                        data: g,
                    },
                );
                continue;
            }
            self.propagate(i, &g, &mut grads);
        }
        self.nodes.clear();
        Ok(out)
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let nodes = &self.nodes;
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !nodes[v.0].needs_grad {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![0.0; nodes[v.0].value.len()]);
            f(slot);
        };
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                acc(*a, &mut |ga| add_into(ga, g));
                acc(*b, &mut |gb| {
                    let n = gb.len();
                    for chunk in g.chunks(n) {
                        add_into(gb, chunk);
                    }
                });
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&nodes[a.0].value.data, &nodes[b.0].value.data);
                acc(*a, &mut |ga| {
                    for ((o, gi), y) in ga.iter_mut().zip(g).zip(bv) {
                        *o += gi * y;
                    }
                });
                acc(*b, &mut |gb| {
                    for ((o, gi), x) in gb.iter_mut().zip(g).zip(av) {
                        *o += gi * x;
                    }
                });
            }
            Op::Scale(a, c) => acc(*a, &mut |ga| {
                for (o, gi) in ga.iter_mut().zip(g) {
                    *o += gi * c;
                }
            }),
            Op::MatMul(a, b) => {
                let (av, bv) = (&nodes[a.0].value, &nodes[b.0].value);
                let geo = MatMulGeometry::new(&av.shape, &bv.shape).expect("validated in forward");
                acc(*a, &mut |ga| {
                    for bi in 0..geo.batch {
                        let (ao, bo, oo) = geo.offsets(bi);
                        mm_a_bt_acc(
                            &g[oo..oo + geo.m * geo.n],
                            &bv.data[bo..bo + geo.k * geo.n],
                            &mut ga[ao..ao + geo.m * geo.k],
                            geo.m,
                            geo.k,
                            geo.n,
                        );
                    }
                });
                acc(*b, &mut |gb| {
                    for bi in 0..geo.batch {
                        let (ao, bo, oo) = geo.offsets(bi);
                        mm_at_g_acc(
                            &av.data[ao..ao + geo.m * geo.k],
                            &g[oo..oo + geo.m * geo.n],
                            &mut gb[bo..bo + geo.k * geo.n],
                            geo.m,
                            geo.k,
                            geo.n,
                        );
                    }
                });
            }
            Op::Transpose(a) => {
                let s = &node.value.shape;
                let r = s.len();
                let back = transpose_batched(g, s[r - 2], s[r - 1]);
                acc(*a, &mut |ga| add_into(ga, &back));
            }
            Op::Reshape(a) => acc(*a, &mut |ga| add_into(ga, g)),
            Op::Concat(parts, axis) => {
                let shape = &node.value.shape;
                let outer: usize = shape[..*axis].iter().product();
                let inner: usize = shape[axis + 1..].iter().product();
                let row = shape[*axis] * inner;
                let mut offset = 0;
                for p in parts {
                    let chunk = nodes[p.0].value.shape[*axis] * inner;
                    acc(*p, &mut |gp| {
                        for o in 0..outer {
                            let src = &g[o * row + offset..o * row + offset + chunk];
                            add_into(&mut gp[o * chunk..(o + 1) * chunk], src);
                        }
                    });
                    offset += chunk;
                }
            }
            Op::MaxLeading(a, arg) => {
                let rest = g.len();
                acc(*a, &mut |ga| {
                    for (j, (&s, gi)) in arg.iter().zip(g).enumerate() {
                        ga[s * rest + j] += gi;
                    }
                });
            }
            Op::SumLeading(a) => acc(*a, &mut |ga| {
                for chunk in ga.chunks_mut(g.len()) {
                    add_into(chunk, g);
                }
            }),
            Op::Sum(a) => acc(*a, &mut |ga| {
                for o in ga.iter_mut() {
                    *o += g[0];
                }
            }),
            Op::Mean(a) => acc(*a, &mut |ga| {
                let s = g[0] / ga.len() as f64;
                for o in ga.iter_mut() {
                    *o += s;
                }
            }),
            Op::Log(a, floor) => {
                let av = &nodes[a.0].value.data;
                acc(*a, &mut |ga| {
                    for ((o, gi), &x) in ga.iter_mut().zip(g).zip(av) {
                        if x > *floor {
                            *o += gi / x;
                        }
                    }
                });
            }
            Op::Softmax(a) => {
                let y = &node.value.data;
                let d = node.value.last_dim();
                acc(*a, &mut |ga| {
                    for ((gr, yr), or) in g.chunks(d).zip(y.chunks(d)).zip(ga.chunks_mut(d)) {
                        let dot: f64 = gr.iter().zip(yr).map(|(p, q)| p * q).sum();
                        for ((o, gi), yi) in or.iter_mut().zip(gr).zip(yr) {
                            *o += yi * (gi - dot);
                        }
                    }
                });
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                let d = node.value.last_dim();
                let gv = &nodes[gain.0].value.data;
                acc(*x, &mut |gx| {
                    let mut dxhat = vec![0.0; d];
                    for (r, istd) in inv_std.iter().enumerate() {
                        let gr = &g[r * d..(r + 1) * d];
                        let hr = &xhat[r * d..(r + 1) * d];
                        let mut s1 = 0.0;
                        let mut s2 = 0.0;
                        for j in 0..d {
                            dxhat[j] = gr[j] * gv[j];
                            s1 += dxhat[j];
                            s2 += dxhat[j] * hr[j];
                        }
                        let n = d as f64;
                        for j in 0..d {
                            gx[r * d + j] += istd / n * (n * dxhat[j] - s1 - hr[j] * s2);
                        }
                    }
                });
                acc(*gain, &mut |gg| {
                    for (gr, hr) in g.chunks(d).zip(xhat.chunks(d)) {
                        for ((o, gi), h) in gg.iter_mut().zip(gr).zip(hr) {
                            *o += gi * h;
                        }
                    }
                });
                acc(*bias, &mut |gb| {
                    for gr in g.chunks(d) {
                        add_into(gb, gr);
                    }
                });
            }
            Op::Gelu(a) => {
                let av = &nodes[a.0].value.data;
                acc(*a, &mut |ga| {
                    for ((o, gi), &x) in ga.iter_mut().zip(g).zip(av) {
                        *o += gi * gelu_derivative(x);
                    }
                });
            }
        }
    }
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2))
}

fn gelu_derivative(x: f64) -> f64 {
    let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    std_normal_cdf(x) + x * pdf
}

/// Max-subtracted softmax of one slice.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

fn is_suffix(short: &[usize], long: &[usize]) -> bool {
    short.len() <= long.len() && long[long.len() - short.len()..] == *short
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn transpose_batched(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    let block = rows * cols;
    for (src, dst) in data.chunks(block).zip(out.chunks_mut(block)) {
        for r in 0..rows {
            for c in 0..cols {
                dst[c * rows + r] = src[r * cols + c];
            }
        }
    }
    out
}

struct MatMulGeometry {
    batch: usize,
    a_batched: bool,
    b_batched: bool,
    m: usize,
    k: usize,
    n: usize,
    out_shape: Vec<usize>,
}

impl MatMulGeometry {
    fn new(sa: &[usize], sb: &[usize]) -> Result<Self> {
        if sa.len() < 2 || sb.len() < 2 {
            return Err(TensorError::Shape(format!("matmul needs rank >= 2: {sa:?} x {sb:?}")));
        }
        let (ra, rb) = (sa.len(), sb.len());
        let (m, k, k2, n) = (sa[ra - 2], sa[ra - 1], sb[rb - 2], sb[rb - 1]);
        if k != k2 {
            return Err(TensorError::Shape(format!("matmul inner dimensions: {sa:?} x {sb:?}")));
        }
        let (lead_a, lead_b) = (&sa[..ra - 2], &sb[..rb - 2]);
        let lead = if lead_a == lead_b || lead_b.is_empty() {
            lead_a
        } else if lead_a.is_empty() {
            lead_b
        } else {
            return Err(TensorError::Shape(format!("matmul batch dimensions: {sa:?} x {sb:?}")));
        };
        let mut out_shape = lead.to_vec();
        out_shape.extend([m, n]);
        Ok(Self {
            batch: lead.iter().product(),
            a_batched: !lead_a.is_empty(),
            b_batched: !lead_b.is_empty(),
            m,
            k,
            n,
            out_shape,
        })
    }

    fn offsets(&self, bi: usize) -> (usize, usize, usize) {
        let ao = if self.a_batched { bi * self.m * self.k } else { 0 };
        let bo = if self.b_batched { bi * self.k * self.n } else { 0 };
        (ao, bo, bi * self.m * self.n)
    }
}

// out[m x n] += a[m x k] . b[k x n]
fn mm_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
}

// out[m x k] += g[m x n] . b[k x n]^T
fn mm_a_bt_acc(g: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let brow = &b[p * n..(p + 1) * n];
            out[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
        }
    }
}

// out[k x n] += a[m x k]^T . g[m x n]
fn mm_at_g_acc(a: &[f64], g: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, gv) in orow.iter_mut().zip(grow) {
                *o += aip * gv;
            }
        }
    }
}
