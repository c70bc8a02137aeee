//! Property tests for the graded layer: homology against a Smith-form
//! oracle, Euler characteristics, functoriality and representative
//! independence of induced maps.

use num::BigInt;
use opsseq_core::graded::{
    bd, check_chain_map, induced_map_on_homology, BigradedModule, Component, DgModule, GradedMap,
};
use opsseq_core::linalg::{kernel, smith, Integers, Matrix, PrimeField, Rationals, Ring};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_mat_z(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: i64, hi: i64) -> Matrix<Integers> {
    Matrix::from_fn(&Integers, rows, cols, |_, _| {
        BigInt::from(rng.random_range(lo..=hi))
    })
}

/// A length-three complex of free modules in one column: `C2 -> C1 -> C0`
/// with `d1 . d2 = 0`, built by factoring `d2` through the kernel of `d1`.
fn rand_column_complex(rng: &mut ChaCha8Rng, max_rank: usize) -> DgModule<Integers> {
    let z = Integers;
    let n0 = rng.random_range(1..=max_rank);
    let n1 = rng.random_range(1..=max_rank);
    let n2 = rng.random_range(1..=max_rank);
    let d1 = rand_mat_z(rng, n0, n1, -3, 3);
    let k = kernel(&d1);
    let d2 = k.mul(&rand_mat_z(rng, k.cols(), n2, -3, 3));
    let mut m = BigradedModule::new(&z);
    for (q, n) in [(0, n0), (1, n1), (2, n2)] {
        let labels = (0..n).map(|s| format!("c{q}_{s}")).collect();
        m.insert(bd(0, q), Component::free(&z, labels));
    }
    let mut d = GradedMap::new("d", bd(0, -1));
    d.set_block(bd(0, 1), d1);
    d.set_block(bd(0, 2), d2);
    DgModule::new(m, d).unwrap()
}

fn mat_rank_z(m: &Matrix<Integers>) -> usize {
    smith(m)
        .diagonal()
        .iter()
        .filter(|e| !Integers.is_zero(e))
        .count()
}

/// Torsion of the cokernel of an integral matrix: its nonzero nonunit
/// invariant factors.  For a complex of free modules this equals the torsion
/// of the homology one degree down the map.
fn coker_torsion(m: &Matrix<Integers>) -> Vec<BigInt> {
    smith(m)
        .diagonal()
        .iter()
        .filter(|e| !Integers.is_zero(e) && !Integers.is_unit(e))
        .cloned()
        .collect()
}

#[test]
fn integral_homology_matches_smith_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f2a);
    for _ in 0..60 {
        let dg = rand_column_complex(&mut rng, 4);
        dg.check_complex().unwrap();
        let h = dg.homology().unwrap();
        let d1 = dg.d.block(&dg.module, &dg.module, bd(0, 1));
        let d2 = dg.d.block(&dg.module, &dg.module, bd(0, 2));
        let n0 = dg.module.rank(bd(0, 0));
        let n1 = dg.module.rank(bd(0, 1));
        let n2 = dg.module.rank(bd(0, 2));
        let (r1, r2) = (mat_rank_z(&d1), mat_rank_z(&d2));

        // H0 = coker(d1), H1 = ker(d1)/im(d2), H2 = ker(d2)
        let h0 = h.at(bd(0, 0)).unwrap();
        assert_eq!(h0.free_rank(), n0 - r1);
        assert_eq!(h0.torsion(), &coker_torsion(&d1)[..]);

        let h1 = h.at(bd(0, 1)).unwrap();
        assert_eq!(h1.free_rank(), (n1 - r1) - r2);
        assert_eq!(h1.torsion(), &coker_torsion(&d2)[..]);

        let h2 = h.at(bd(0, 2)).unwrap();
        assert_eq!(h2.free_rank(), n2 - r2);
        assert!(h2.torsion().is_empty());
    }
}

/// Build a field-coefficient column complex of length `len` by repeatedly
/// factoring through kernels.
fn rand_field_complex<R: Ring>(
    ring: &R,
    rng: &mut ChaCha8Rng,
    len: usize,
    max_rank: usize,
) -> DgModule<R> {
    let mut m = BigradedModule::new(ring);
    let mut d = GradedMap::new("d", bd(0, -1));
    let mut ranks = Vec::new();
    for _ in 0..len {
        ranks.push(rng.random_range(1..=max_rank));
    }
    for (q, n) in ranks.iter().enumerate() {
        let labels = (0..*n).map(|s| format!("c{q}_{s}")).collect();
        m.insert(bd(0, q as i64), Component::free(ring, labels));
    }
    let mut prev_kernel: Option<Matrix<R>> = None;
    for q in 1..len {
        let raw = Matrix::from_fn(ring, ranks[q - 1], ranks[q], |_, _| {
            ring.from_i64(rng.random_range(-4..=4))
        });
        let block = match &prev_kernel {
            None => raw,
            Some(k) => {
                let coeffs = Matrix::from_fn(ring, k.cols(), ranks[q], |_, _| {
                    ring.from_i64(rng.random_range(-4..=4))
                });
                k.mul(&coeffs)
            }
        };
        prev_kernel = Some(kernel(&block));
        d.set_block(bd(0, q as i64), block);
    }
    DgModule::new(m, d).unwrap()
}

#[test]
fn euler_characteristic_is_preserved_by_homology_over_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0e01);
    let f5 = PrimeField::new(5).unwrap();
    for trial in 0..40 {
        if trial % 2 == 0 {
            let dg = rand_field_complex(&f5, &mut rng, 4, 4);
            check_euler(&dg);
        } else {
            let dg = rand_field_complex(&Rationals, &mut rng, 4, 4);
            check_euler(&dg);
        }
    }
}

fn check_euler<R: Ring>(dg: &DgModule<R>) {
    dg.check_complex().unwrap();
    let h = dg.homology().unwrap();
    let mut chi_c: i64 = 0;
    let mut chi_h: i64 = 0;
    for at in dg.module.support() {
        let sign = if at.q.rem_euclid(2) == 0 { 1 } else { -1 };
        chi_c += sign * dg.module.rank(at) as i64;
        chi_h += sign * h.rank(at) as i64;
    }
    assert_eq!(chi_c, chi_h);
}

#[test]
fn differential_is_an_anticommuting_chain_map_inducing_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0d1f);
    for _ in 0..20 {
        let dg = rand_column_complex(&mut rng, 4);
        // d has odd vertical degree, so the chain-map condition reads
        // d.d = -d.d, i.e. exactly d^2 = 0
        check_chain_map(&dg.d, &dg, &dg).unwrap();
        let h = dg.homology().unwrap();
        let ind = induced_map_on_homology(&dg.d, &dg, &dg, &h, &h).unwrap();
        for (at, m) in &ind {
            if let Some(sq) = h.at(at.plus(bd(0, -1))) {
                for j in 0..m.cols() {
                    assert!(sq.nf_is_zero(&m.col_vec(j)));
                }
            }
        }
    }
}

#[test]
fn scalar_chain_maps_compose_functorially_on_homology() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0fac);
    let z = Integers;
    for _ in 0..25 {
        let dg = rand_column_complex(&mut rng, 4);
        let h = dg.homology().unwrap();
        let scalar_map = |n: i64, name: &str| {
            let mut f = GradedMap::new(name, bd(0, 0));
            for at in dg.module.support() {
                let r = dg.module.rank(at);
                f.set_block(at, Matrix::identity(&z, r).scale(&z.from_i64(n)));
            }
            f
        };
        let (a, b) = (rng.random_range(2..=5), rng.random_range(2..=5));
        let f = scalar_map(a, "f");
        let g = scalar_map(b, "g");
        let gf = scalar_map(a * b, "gf");
        check_chain_map(&f, &dg, &dg).unwrap();
        let ind_f = induced_map_on_homology(&f, &dg, &dg, &h, &h).unwrap();
        let ind_g = induced_map_on_homology(&g, &dg, &dg, &h, &h).unwrap();
        let ind_gf = induced_map_on_homology(&gf, &dg, &dg, &h, &h).unwrap();
        for at in h.support() {
            let sq = h.at(at).unwrap();
            let product = ind_g[&at].mul(&ind_f[&at]);
            let direct = &ind_gf[&at];
            for j in 0..product.cols() {
                assert!(sq.nf_eq(&product.col_vec(j), &direct.col_vec(j)));
            }
        }
    }
}

#[test]
fn induced_maps_ignore_representative_perturbation() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0bed);
    let z = Integers;
    for _ in 0..25 {
        let dg = rand_column_complex(&mut rng, 4);
        let h = dg.homology().unwrap();
        let triple = |n: i64| {
            let mut f = GradedMap::new("x3", bd(0, 0));
            for at in dg.module.support() {
                let r = dg.module.rank(at);
                f.set_block(at, Matrix::identity(&z, r).scale(&z.from_i64(n)));
            }
            f
        };
        let f = triple(3);
        let ind = induced_map_on_homology(&f, &dg, &dg, &h, &h).unwrap();
        for at in h.support() {
            let sq = h.at(at).unwrap();
            let src_above = at.plus(bd(0, 1));
            let d_in = dg.d.block(&dg.module, &dg.module, src_above);
            for s in 0..sq.gen_count() {
                let mut nf = vec![z.zero(); sq.gen_count()];
                nf[s] = z.one();
                let mut rep = sq.lift(&nf);
                // perturb the representative by a boundary
                if d_in.cols() > 0 {
                    let noise: Vec<BigInt> = (0..d_in.cols())
                        .map(|_| BigInt::from(rng.random_range(-2..=2i64)))
                        .collect();
                    let boundary = d_in.apply(&noise);
                    for (r, b) in rep.iter_mut().zip(&boundary) {
                        *r = z.add(r, b);
                    }
                }
                let img = f.apply(&dg.module, &dg.module, at, &rep);
                let got = sq.project(&img).expect("image of a cycle is a cycle");
                assert!(sq.nf_eq(&got, &ind[&at].col_vec(s)));
            }
        }
    }
}

#[test]
fn cycle_inclusion_surjects_onto_homology_over_a_field() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0ca1);
    let f5 = PrimeField::new(5).unwrap();
    for _ in 0..20 {
        let dg = rand_field_complex(&f5, &mut rng, 3, 4);
        let h = dg.homology().unwrap();
        // the subcomplex of cycles, with zero differential
        let mut zm = BigradedModule::new(&f5);
        let mut blocks = Vec::new();
        for at in dg.module.support() {
            let k = kernel(&dg.d.block(&dg.module, &dg.module, at));
            if k.cols() > 0 {
                let labels = (0..k.cols()).map(|s| format!("z{}_{s}", at.q)).collect();
                zm.insert(at, Component::free(&f5, labels));
                blocks.push((at, k));
            }
        }
        let zd = GradedMap::new("0", bd(0, -1));
        let zdg = DgModule::new(zm, zd).unwrap();
        let mut incl = GradedMap::new("incl", bd(0, 0));
        for (at, k) in blocks {
            incl.set_block(at, k);
        }
        check_chain_map(&incl, &zdg, &dg).unwrap();
        let hz = zdg.homology().unwrap();
        let ind = induced_map_on_homology(&incl, &zdg, &dg, &hz, &h).unwrap();
        for at in h.support() {
            let target_dim = h.rank(at);
            if target_dim == 0 {
                continue;
            }
            let m = &ind[&at];
            let cb = opsseq_core::linalg::ColumnBasis::new(m);
            assert_eq!(cb.rank(), target_dim, "cycle classes must cover homology");
        }
    }
}
