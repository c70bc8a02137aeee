//! Property tests for operads: the associative operad's tables are compared
//! against direct evaluation of permutation words, and random single-entry
//! corruptions of the structure data must be caught by the axiom checker.

use opsseq_core::linalg::{Integers, Matrix, PrimeField, Rationals, Ring};
use opsseq_core::operad::{builtin_assoc, builtin_comm, builtin_lie, check_operad, Operad};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn builtin_operads_pass_their_axioms_at_cap_four() {
    check_operad(&builtin_comm(&Integers, 4)).unwrap();
    check_operad(&builtin_assoc(&PrimeField::new(5).unwrap(), 4)).unwrap();
    check_operad(&builtin_assoc(&Integers, 3)).unwrap();
    check_operad(&builtin_lie(&Rationals, 3).unwrap()).unwrap();
    check_operad(&builtin_lie(&PrimeField::new(7).unwrap(), 3).unwrap()).unwrap();
}

/// Evaluate the operation a permutation word represents: the product of the
/// inputs in word order.
fn eval_word(word: &[usize], inputs: &[String]) -> String {
    word.iter().map(|&v| inputs[v - 1].clone()).collect()
}

/// Recover the single basis word an operad element stands for (the element
/// must be a basis vector).
fn word_of<R: Ring>(op: &Operad<R>, e: &opsseq_core::operad::OpElem<R>) -> Vec<usize> {
    let ring = op.ring();
    let mut idx = None;
    for (k, c) in e.coeffs.iter().enumerate() {
        if !ring.is_zero(c) {
            assert!(idx.is_none(), "not a basis vector");
            assert!(ring.is_zero(&ring.sub(c, &ring.one())));
            idx = Some(k);
        }
    }
    let label = &op.labels(e.arity, 0)[idx.unwrap()];
    label.chars().map(|ch| ch.to_digit(10).unwrap() as usize).collect()
}

#[test]
fn assoc_composition_agrees_with_word_evaluation() {
    let f5 = PrimeField::new(5).unwrap();
    let op = builtin_assoc(&f5, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a55);
    let letters: Vec<String> = "abcdefg".chars().map(String::from).collect();
    for _ in 0..200 {
        let n = rng.random_range(1..=3usize);
        let m = rng.random_range(1..=(4 - n + 1));
        let i = rng.random_range(1..=n);
        let fact = |k: usize| (1..=k).product::<usize>();
        let a = op.basis_elem(n, 0, rng.random_range(0..fact(n)));
        let b = op.basis_elem(m, 0, rng.random_range(0..fact(m)));
        let ab = op.compose(&a, i, &b).unwrap();

        // direct evaluation: plug the inner product into slot i of the outer
        let total = n + m - 1;
        let xs: Vec<String> = letters[..total].to_vec();
        let inner_inputs: Vec<String> = xs[i - 1..i - 1 + m].to_vec();
        let inner_val = eval_word(&word_of(&op, &b), &inner_inputs);
        let mut outer_inputs: Vec<String> = xs[..i - 1].to_vec();
        outer_inputs.push(inner_val);
        outer_inputs.extend_from_slice(&xs[i - 1 + m..]);
        let want = eval_word(&word_of(&op, &a), &outer_inputs);

        let got = eval_word(&word_of(&op, &ab), &xs);
        assert_eq!(got, want);
    }
}

#[test]
fn assoc_transpositions_agree_with_input_swaps() {
    let f5 = PrimeField::new(5).unwrap();
    let op = builtin_assoc(&f5, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a56);
    let letters: Vec<String> = "abcd".chars().map(String::from).collect();
    for _ in 0..100 {
        let n = rng.random_range(2..=4usize);
        let fact = |k: usize| (1..=k).product::<usize>();
        let a = op.basis_elem(n, 0, rng.random_range(0..fact(n)));
        let h = rng.random_range(1..n);
        let ta = op.act_t(h, &a);
        // (t_h . a)(x_1..x_n) = a(.. x_{h+1}, x_h ..)
        let xs: Vec<String> = letters[..n].to_vec();
        let mut swapped = xs.clone();
        swapped.swap(h - 1, h);
        let got = eval_word(&word_of(&op, &ta), &xs);
        let want = eval_word(&word_of(&op, &a), &swapped);
        assert_eq!(got, want);
    }
}

/// Apply a random single-entry corruption to one of the operad's tables.
/// Returns a human-readable tag of what was corrupted.
fn corrupt<R: Ring>(op: &mut Operad<R>, rng: &mut ChaCha8Rng) -> String {
    let ring = op.ring().clone();
    let bump = |ring: &R, m: &Matrix<R>, rng: &mut ChaCha8Rng| -> Matrix<R> {
        let (i, j) = (rng.random_range(0..m.rows()), rng.random_range(0..m.cols()));
        let mut out = m.clone();
        let cur = out.at(i, j).clone();
        out.set(i, j, ring.add(&cur, &ring.one()));
        out
    };
    loop {
        match rng.random_range(0..3u32) {
            0 => {
                // transposition entry
                let n = rng.random_range(2..=3usize);
                let h = rng.random_range(1..n);
                let cur = {
                    let r = op.rank(n, 0);
                    let mut t = Matrix::zero(&ring, r, r);
                    for idx in 0..r {
                        let img = op.act_t(h, &op.basis_elem(n, 0, idx));
                        for (row, c) in img.coeffs.iter().enumerate() {
                            t.set(row, idx, c.clone());
                        }
                    }
                    t
                };
                op.set_transposition(n, h, 0, bump(&ring, &cur, rng));
                return format!("t_{h} on P({n})");
            }
            1 => {
                // composition entry
                let n = rng.random_range(1..=3usize);
                let m = rng.random_range(1..=(3 - n + 1));
                let i = rng.random_range(1..=n);
                let block = {
                    let rows = op.rank(n + m - 1, 0);
                    let cols = op.rank(n, 0) * op.rank(m, 0);
                    let mut b = Matrix::zero(&ring, rows, cols);
                    for ia in 0..op.rank(n, 0) {
                        for ib in 0..op.rank(m, 0) {
                            let img = op
                                .compose(&op.basis_elem(n, 0, ia), i, &op.basis_elem(m, 0, ib))
                                .unwrap();
                            for (row, c) in img.coeffs.iter().enumerate() {
                                b.set(row, ia * op.rank(m, 0) + ib, c.clone());
                            }
                        }
                    }
                    b
                };
                op.set_composition(n, m, i, 0, 0, bump(&ring, &block, rng));
                return format!("P({n}) o_{i} P({m})");
            }
            _ => {
                // unit coefficient
                let mut u = op.unit().coeffs;
                let k = rng.random_range(0..u.len());
                u[k] = ring.add(&u[k], &ring.one());
                op.set_unit(u);
                return "unit".to_string();
            }
        }
    }
}

#[test]
fn single_entry_corruptions_are_always_detected() {
    let f5 = PrimeField::new(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0bad);
    for trial in 0..40 {
        let mut op = builtin_assoc(&f5, 3);
        let what = corrupt(&mut op, &mut rng);
        assert!(
            check_operad(&op).is_err(),
            "corruption of {what} went undetected (trial {trial})"
        );
    }
    for trial in 0..20 {
        let mut op = builtin_lie(&Rationals, 3).unwrap();
        let what = corrupt(&mut op, &mut rng);
        assert!(
            check_operad(&op).is_err(),
            "corruption of {what} went undetected (trial {trial})"
        );
    }
}
