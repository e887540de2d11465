//! Gated recurrent unit with reset, update and candidate ("new") gates:
//!
//! ```text
//! r = σ(W_r x + U_r h + b_r)
//! z = σ(W_z x + U_z h + b_z)
//! n = tanh(W_n x + U_n (r ⊙ h) + b_n)
//! h' = (1 - z) ⊙ n + z ⊙ h
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::params::{ParamId, ParamSet};
use super::tape::{Tape, Var};
use super::tensor::Tensor;

/// Parameter handles of one GRU. Input weights are stored `(d_hid, d_in)`,
/// recurrent weights `(d_hid, d_hid)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gru {
    pub d_in: usize,
    pub d_hid: usize,
    pub w_r: ParamId,
    pub w_z: ParamId,
    pub w_n: ParamId,
    pub u_r: ParamId,
    pub u_z: ParamId,
    pub u_n: ParamId,
    pub b_r: ParamId,
    pub b_z: ParamId,
    pub b_n: ParamId,
}

struct GruVars {
    w_r: Var,
    w_z: Var,
    w_n: Var,
    u_r: Var,
    u_z: Var,
    u_n: Var,
    b_r: Var,
    b_z: Var,
    b_n: Var,
}

impl Gru {
    /// Registers `<prefix>.{w,u,b}_{r,z,n}`; weights ~ U(±1/√d_hid), biases 0.
    pub fn register<T: Scalar>(
        params: &mut ParamSet<T>,
        prefix: &str,
        d_in: usize,
        d_hid: usize,
        rng: &mut impl Rng,
    ) -> Gru {
        let bound = 1.0 / (d_hid as f64).sqrt();
        let mut w = |name: &str, cols: usize| {
            params.add(
                format!("{prefix}.{name}"),
                Tensor::uniform(&[d_hid, cols], bound, rng),
            )
        };
        let (w_r, w_z, w_n) = (w("w_r", d_in), w("w_z", d_in), w("w_n", d_in));
        let (u_r, u_z, u_n) = (w("u_r", d_hid), w("u_z", d_hid), w("u_n", d_hid));
        let mut b = |name: &str| params.add(format!("{prefix}.{name}"), Tensor::zeros(&[d_hid]));
        let (b_r, b_z, b_n) = (b("b_r"), b("b_z"), b("b_n"));
        Gru {
            d_in,
            d_hid,
            w_r,
            w_z,
            w_n,
            u_r,
            u_z,
            u_n,
            b_r,
            b_z,
            b_n,
        }
    }

    fn vars<T: Scalar>(&self, tape: &mut Tape<'_, T>) -> GruVars {
        GruVars {
            w_r: tape.param(self.w_r),
            w_z: tape.param(self.w_z),
            w_n: tape.param(self.w_n),
            u_r: tape.param(self.u_r),
            u_z: tape.param(self.u_z),
            u_n: tape.param(self.u_n),
            b_r: tape.param(self.b_r),
            b_z: tape.param(self.b_z),
            b_n: tape.param(self.b_n),
        }
    }

    /// One recurrence step on the tape.
    pub fn step<T: Scalar>(&self, tape: &mut Tape<'_, T>, x: Var, h: Var) -> Var {
        let p = self.vars(tape);
        let gate = |tape: &mut Tape<'_, T>, w: Var, u: Var, b: Var, hin: Var| {
            let wx = tape.matvec(w, x);
            let uh = tape.matvec(u, hin);
            let s = tape.add(wx, uh);
            tape.add(s, b)
        };
        let r = gate(tape, p.w_r, p.u_r, p.b_r, h);
        let r = tape.sigmoid(r);
        let z = gate(tape, p.w_z, p.u_z, p.b_z, h);
        let z = tape.sigmoid(z);
        let rh = tape.mul(r, h);
        let n = gate(tape, p.w_n, p.u_n, p.b_n, rh);
        let n = tape.tanh(n);
        let keep_new = tape.one_minus(z);
        let a = tape.mul(keep_new, n);
        let b = tape.mul(z, h);
        tape.add(a, b)
    }

    /// Runs left to right from the zero state; returns one state per input.
    pub fn scan<T: Scalar>(&self, tape: &mut Tape<'_, T>, inputs: &[Var]) -> Vec<Var> {
        let mut h = tape.input(vec![T::zero(); self.d_hid]);
        inputs
            .iter()
            .map(|&x| {
                h = self.step(tape, x, h);
                h
            })
            .collect()
    }
}

/// Bidirectional pass. Both outputs are indexed in input order: `fwd[t]` has
/// read inputs `0..=t`, `bwd[t]` has read inputs `t..`.
pub fn run_bigru<T: Scalar>(
    tape: &mut Tape<'_, T>,
    inputs: &[Var],
    fwd: &Gru,
    bwd: &Gru,
) -> (Vec<Var>, Vec<Var>) {
    let forward = fwd.scan(tape, inputs);
    let reversed: Vec<Var> = inputs.iter().rev().copied().collect();
    let mut backward = bwd.scan(tape, &reversed);
    backward.reverse();
    (forward, backward)
}

/// Value-only single step with shape checks.
pub fn gru_cell<T: Scalar>(
    params: &ParamSet<T>,
    gru: &Gru,
    x: &[T],
    h_prev: &[T],
) -> Result<Vec<T>> {
    if x.len() != gru.d_in || h_prev.len() != gru.d_hid {
        return Err(Error::Shape(format!(
            "GRU expects input {} and state {}, got {} and {}",
            gru.d_in,
            gru.d_hid,
            x.len(),
            h_prev.len()
        )));
    }
    let mut tape = Tape::new(params);
    let x = tape.input(x.to_vec());
    let h = tape.input(h_prev.to_vec());
    let out = gru.step(&mut tape, x, h);
    Ok(tape.value(out).to_vec())
}

/// Hidden states per position.
pub type States<T> = Vec<Vec<T>>;

/// Value-only bidirectional pass over plain vectors.
pub fn run_bigru_values<T: Scalar>(
    params: &ParamSet<T>,
    inputs: &[Vec<T>],
    fwd: &Gru,
    bwd: &Gru,
) -> Result<(States<T>, States<T>)> {
    if let Some(bad) = inputs
        .iter()
        .find(|x| x.len() != fwd.d_in || x.len() != bwd.d_in)
    {
        return Err(Error::Shape(format!(
            "GRU expects input {}, got {}",
            fwd.d_in,
            bad.len()
        )));
    }
    let mut tape = Tape::new(params);
    let xs: Vec<Var> = inputs.iter().map(|x| tape.input(x.clone())).collect();
    let (f, b) = run_bigru(&mut tape, &xs, fwd, bwd);
    let read = |vs: Vec<Var>| vs.into_iter().map(|v| tape.value(v).to_vec()).collect();
    Ok((read(f), read(b)))
}
