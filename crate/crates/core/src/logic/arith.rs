//! Small binary arithmetic over formulas, for sums of one-hot encoded
//! integers. Bits are little-endian; auxiliary variables are defined by
//! equivalences pushed into the encoding.

use super::{Atom, Encoding, Formula, VarId};

pub type Bits = Vec<Formula>;

fn define(enc: &mut Encoding, kind: &str, f: Formula) -> Formula {
    match f {
        Formula::Const(_) | Formula::Atom(_) => f,
        _ => {
            let v = enc.reg.fresh_aux(kind);
            enc.push(Formula::iff(Atom(v), f));
            Atom(v)
        }
    }
}

pub fn width_for(max: u64) -> usize {
    (64 - max.leading_zeros() as usize).max(1)
}

pub fn constant(k: u64, width: usize) -> Bits {
    (0..width).map(|b| Formula::Const(k >> b & 1 == 1)).collect()
}

/// Binary value of a one-hot block where `onehot[j]` means value `j`.
pub fn onehot_bits(enc: &mut Encoding, onehot: &[VarId]) -> Bits {
    let width = width_for(onehot.len().saturating_sub(1) as u64);
    (0..width)
        .map(|b| {
            let f = Formula::or(onehot.iter().enumerate().filter(|(j, _)| j >> b & 1 == 1).map(|(_, &v)| Atom(v)));
            define(enc, "bit", f)
        })
        .collect()
}

fn xor(a: Formula, b: Formula) -> Formula {
    Formula::iff(a, Formula::not(b))
}

pub fn add(enc: &mut Encoding, a: &Bits, b: &Bits) -> Bits {
    let width = a.len().max(b.len()) + 1;
    let get = |v: &Bits, i: usize| v.get(i).cloned().unwrap_or(Formula::Const(false));
    let mut carry = Formula::Const(false);
    let mut out = Vec::with_capacity(width);
    for i in 0..width - 1 {
        let (x, y) = (get(a, i), get(b, i));
        let s = xor(xor(x.clone(), y.clone()), carry.clone());
        let c = Formula::or([
            Formula::and([x.clone(), y.clone()]),
            Formula::and([x, carry.clone()]),
            Formula::and([y, carry]),
        ]);
        out.push(define(enc, "sum", s));
        carry = define(enc, "carry", c);
    }
    out.push(carry);
    out
}

pub fn sum(enc: &mut Encoding, terms: &[Bits]) -> Bits {
    match terms {
        [] => constant(0, 1),
        [t] => t.clone(),
        _ => {
            let mid = terms.len() / 2;
            let l = sum(enc, &terms[..mid]);
            let r = sum(enc, &terms[mid..]);
            add(enc, &l, &r)
        }
    }
}

/// `a <= b` as unsigned integers.
pub fn le(a: &Bits, b: &Bits) -> Formula {
    let width = a.len().max(b.len());
    let get = |v: &Bits, i: usize| v.get(i).cloned().unwrap_or(Formula::Const(false));
    let mut acc = Formula::Const(true);
    for i in 0..width {
        let (x, y) = (get(a, i), get(b, i));
        // decided by bit i unless equal there
        acc = Formula::or([
            Formula::and([Formula::not(x.clone()), y.clone()]),
            Formula::and([Formula::iff(x, y), acc]),
        ]);
    }
    acc
}

pub fn le_const(a: &Bits, k: u64) -> Formula {
    if width_for(k) > a.len() {
        return Formula::Const(true);
    }
    le(a, &constant(k, a.len()))
}

pub fn ge_const(a: &Bits, k: u64) -> Formula {
    le(&constant(k, width_for(k).max(a.len())), a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label;

    #[test]
    fn adder_and_comparators_exhaustive() {
        for x in 0..6u64 {
            for y in 0..6u64 {
                let mut enc = Encoding::new();
                let xs: Vec<VarId> = (0..6).map(|j| enc.reg.var(label!("x", j))).collect();
                let ys: Vec<VarId> = (0..6).map(|j| enc.reg.var(label!("y", j))).collect();
                enc.push(Atom(xs[x as usize]));
                enc.push(Atom(ys[y as usize]));
                enc.extend(Formula::exactly_one(&xs));
                enc.extend(Formula::exactly_one(&ys));
                let a = onehot_bits(&mut enc, &xs);
                let b = onehot_bits(&mut enc, &ys);
                let s = add(&mut enc, &a, &b);
                let t = sum(&mut enc, &[a.clone(), b.clone(), constant(3, 2)]);
                for k in 0..14u64 {
                    let mut e = enc.clone();
                    e.push(le_const(&s, k));
                    e.push(ge_const(&t, k));
                    assert_eq!(e.solve().is_sat(), x + y <= k && x + y + 3 >= k, "{x} {y} {k}");
                }
                let mut e = enc.clone();
                e.push(le(&a, &b));
                assert_eq!(e.solve().is_sat(), x <= y);
            }
        }
    }
}
