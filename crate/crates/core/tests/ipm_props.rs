mod common;

use blockipm::detect::{detect_structure, validate_structure, Block, BlockStructure, DetectionParams};
use blockipm::ipm::{
    barrier_update, centering_sigma, compute_residuals, direction_full, direction_reduced, solve, starting_point, step_length,
    Backend, Direction, IpmError, IpmOptions, IpmState, NormalEquations, ReducedWorkspace, Status,
};
use blockipm::linalg::SparseMatrix;
use blockipm::model::{build_cpl, CplBase, CplSpec, StandardFormLP};
use common::{dense_solve, matvec, matvec_t, norm, vertex_min};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solves the full `(2n + m)`-dimensional linearized KKT system densely.
fn kkt_oracle(lp: &StandardFormLP, st: &IpmState) -> Direction {
    let (m, n) = (lp.m(), lp.n());
    let a = lp.a.to_dense();
    let dim = 2 * n + m;
    let mut k = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for i in 0..m {
        k[i][..n].copy_from_slice(&a[i]);
        rhs[i] = st.r_primal[i];
    }
    for j in 0..n {
        let row = m + j;
        for i in 0..m {
            k[row][n + i] = a[i][j];
        }
        k[row][n + m + j] = 1.0;
        rhs[row] = st.r_dual[j];
        let row = m + n + j;
        k[row][j] = st.s[j];
        k[row][n + m + j] = st.x[j];
        rhs[row] = st.r_comp[j];
    }
    let sol = dense_solve(&k, &rhs).expect("nonsingular KKT system");
    Direction {
        dx: sol[..n].to_vec(),
        dy: sol[n..n + m].to_vec(),
        ds: sol[n + m..].to_vec(),
    }
}

/// Largest residual of the three linearized equations, relative to `1 + ‖rhs‖`.
fn kkt_residual(lp: &StandardFormLP, st: &IpmState, d: &Direction) -> f64 {
    let a = lp.a.to_dense();
    let rel = |lhs: Vec<f64>, rhs: &[f64]| {
        let diff: Vec<f64> = lhs.iter().zip(rhs).map(|(l, r)| l - r).collect();
        norm(&diff) / (1.0 + norm(rhs))
    };
    let p = rel(matvec(&a, &d.dx), &st.r_primal);
    let dual: Vec<f64> = matvec_t(&a, &d.dy).iter().zip(&d.ds).map(|(u, v)| u + v).collect();
    let q = rel(dual, &st.r_dual);
    let comp: Vec<f64> = (0..lp.n()).map(|j| st.s[j] * d.dx[j] + st.x[j] * d.ds[j]).collect();
    p.max(q).max(rel(comp, &st.r_comp))
}

fn random_state(lp: &StandardFormLP, rng: &mut ChaCha8Rng, spread: f64, mu: f64) -> IpmState {
    let x = (0..lp.n()).map(|_| 10f64.powf(rng.random_range(-spread..=spread))).collect();
    let s = (0..lp.n()).map(|_| 10f64.powf(rng.random_range(-spread..=spread))).collect();
    let y = (0..lp.m()).map(|_| rng.random_range(-1.0..1.0)).collect();
    IpmState::new(lp, x, y, s, mu).unwrap()
}

fn random_dense_lp(m: usize, n: usize, rng: &mut ChaCha8Rng) -> StandardFormLP {
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let b = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>();
    let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>();
    StandardFormLP::from_dense(&a, &b, &c).unwrap()
}

fn assert_dy_close(reduced: &[f64], full: &[f64], tol: f64) {
    let scale = 1.0 + norm(full);
    for (i, (r, f)) in reduced.iter().zip(full).enumerate() {
        assert!((r - f).abs() <= tol * scale, "component {i}: {r} vs {f}");
    }
}

#[test]
fn scalar_direction_matches_dense_kkt() {
    let lp = StandardFormLP::from_dense(&[vec![1.0]], &[1.0], &[1.0]).unwrap();
    let st = IpmState::new(&lp, vec![2.0], vec![0.0], vec![1.0], 0.0).unwrap();
    let d = direction_full(&lp, &st).unwrap();
    let oracle = kkt_oracle(&lp, &st);
    assert!((oracle.dx[0] + 1.0).abs() < 1e-14 && (oracle.dy[0] - 0.5).abs() < 1e-14 && (oracle.ds[0] + 0.5).abs() < 1e-14);
    for (got, want) in [(&d.dx, &oracle.dx), (&d.dy, &oracle.dy), (&d.ds, &oracle.ds)] {
        assert!((got[0] - want[0]).abs() < 1e-14);
    }
}

#[test]
fn random_lp_direction_satisfies_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let lp = random_dense_lp(10, 25, &mut rng);
        let st = random_state(&lp, &mut rng, 1.0, 0.1);
        let d = direction_full(&lp, &st).unwrap();
        assert!(kkt_residual(&lp, &st, &d) <= 1e-9);
        let oracle = kkt_oracle(&lp, &st);
        assert_dy_close(&d.dy, &oracle.dy, 1e-8);
    }
}

#[test]
fn kkt_point_gives_zero_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a: Vec<Vec<f64>> = (0..4).map(|_| (0..9).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mu = 0.3;
    let x: Vec<f64> = (0..9).map(|_| rng.random_range(0.5..2.0)).collect();
    let s: Vec<f64> = x.iter().map(|v| mu / v).collect();
    let y: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = matvec(&a, &x);
    let c: Vec<f64> = matvec_t(&a, &y).iter().zip(&s).map(|(u, v)| u + v).collect();
    let lp = StandardFormLP::from_dense(&a, &b, &c).unwrap();
    let st = IpmState::new(&lp, x, y, s, mu).unwrap();
    let d = direction_full(&lp, &st).unwrap();
    assert!(d.dx.iter().chain(&d.dy).chain(&d.ds).all(|v| v.abs() < 1e-12));
}

/// Two first-block rows; five block rows that touch only their own diagonal
/// column, which also carries first-block entries.
fn rank_zero_instance(rng: &mut ChaCha8Rng) -> (StandardFormLP, BlockStructure) {
    let mut t = Vec::new();
    for i in 0..2 {
        for j in 0..4 {
            t.push((i, j, rng.random_range(0.5..1.5)));
        }
        for r in 0..5 {
            t.push((i, 4 + r, rng.random_range(-1.0..1.0)));
        }
    }
    for r in 0..5 {
        t.push((2 + r, 4 + r, rng.random_range(0.5..2.0)));
    }
    let a = SparseMatrix::from_triplets(7, 9, &t).unwrap();
    let lp = StandardFormLP::new(a, vec![1.0; 7], vec![1.0; 9]).unwrap();
    let s = BlockStructure {
        n_rows: 7,
        n_cols: 9,
        blocks: vec![Block {
            rows: (2..7).collect(),
            diag_cols: (4..9).collect(),
            coupling_cols: Vec::new(),
        }],
    };
    (lp, s)
}

#[test]
fn rank_zero_coupling_matches_full() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let (lp, s) = rank_zero_instance(&mut rng);
        assert!(validate_structure(&lp.a, &s).reducible());
        let ws = ReducedWorkspace::new(&lp.a, &s).unwrap();
        assert_eq!(ws.coupling_ranks(), vec![0]);
        let st = random_state(&lp, &mut rng, 1.0, 0.1);
        let full = direction_full(&lp, &st).unwrap();
        let reduced = direction_reduced(&lp, &s, &st).unwrap();
        assert_dy_close(&reduced.dy, &full.dy, 1e-8);
    }
}

/// One first-block row, four block rows sharing coupling column 0.
fn scalar_instance(rng: &mut ChaCha8Rng) -> (StandardFormLP, BlockStructure) {
    let mut t = vec![(0, 0, rng.random_range(0.5..1.5)), (0, 5, 1.0)];
    for r in 1..5 {
        t.push((0, r, rng.random_range(-1.0..1.0)));
        t.push((r, 0, rng.random_range(-1.0..1.0)));
        t.push((r, r, rng.random_range(0.5..2.0)));
    }
    let a = SparseMatrix::from_triplets(5, 6, &t).unwrap();
    let lp = StandardFormLP::new(a, vec![1.0; 5], vec![1.0; 6]).unwrap();
    let s = BlockStructure {
        n_rows: 5,
        n_cols: 6,
        blocks: vec![Block {
            rows: (1..5).collect(),
            diag_cols: (1..5).collect(),
            coupling_cols: vec![0],
        }],
    };
    (lp, s)
}

#[test]
fn scalar_reduced_system_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..5 {
        let (lp, s) = scalar_instance(&mut rng);
        let st = random_state(&lp, &mut rng, 1.0, 0.1);
        let mut ws = ReducedWorkspace::new(&lp.a, &s).unwrap();
        let w: Vec<f64> = st.x.iter().zip(&st.s).map(|(x, s)| x / s).collect();
        ws.factor(&w, 0.0).unwrap();
        assert_eq!(ws.factored_dim(), 1);

        // Dense normal equations N Δy = r_p + A(W r_d − S⁻¹ r_c).
        let a = lp.a.to_dense();
        let nmat: Vec<Vec<f64>> = (0..lp.m())
            .map(|i| (0..lp.m()).map(|k| (0..lp.n()).map(|j| a[i][j] * w[j] * a[k][j]).sum()).collect())
            .collect();
        let t: Vec<f64> = (0..lp.n()).map(|j| w[j] * st.r_dual[j] - st.r_comp[j] / st.s[j]).collect();
        let rhs: Vec<f64> = matvec(&a, &t).iter().zip(&st.r_primal).map(|(u, v)| u + v).collect();
        let expected = dense_solve(&nmat, &rhs).unwrap();
        assert_dy_close(&ws.solve(&rhs).unwrap(), &expected, 1e-10);
        assert_dy_close(&direction_reduced(&lp, &s, &st).unwrap().dy, &expected, 1e-10);
    }
}

fn dense_spec(p: usize, l: usize, dim: usize, rng: &mut ChaCha8Rng) -> CplSpec {
    let mut nz = || {
        let v: f64 = rng.random_range(0.5..2.0);
        if rng.random_bool(0.5) { v } else { -v }
    };
    let mut spec = CplSpec {
        p,
        l,
        f: (0..p * l).map(|_| (0..dim).map(|j| (j, nz())).collect()).collect(),
        g: (0..p * l).map(|_| nz()).collect(),
        bound: 0.0,
        h: Vec::new(),
        zero_piece: false,
    };
    // Strictly feasible at the origin.
    spec.bound = spec.sides(&vec![0.0; dim]).0 + 1.0;
    spec
}

fn boxed_base(dim: usize) -> CplBase {
    let mut base = CplBase::new(vec![1.0; dim]);
    base.lower = vec![-10.0; dim];
    base.upper = vec![10.0; dim];
    base
}

#[test]
fn cpl_direction_matches_full() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let lp = build_cpl(&boxed_base(10), &[dense_spec(50, 2, 10, &mut rng)]).unwrap();
    let s = detect_structure(&lp.a, &DetectionParams::default());
    assert_eq!(s.blocks.len(), 1);
    assert_eq!(s.first_rows().len(), 10);
    for spread in [0.0, 1.0, 3.0] {
        let st = random_state(&lp, &mut rng, spread, 0.1);
        let full = direction_full(&lp, &st).unwrap();
        let reduced = direction_reduced(&lp, &s, &st).unwrap();
        assert_dy_close(&reduced.dy, &full.dy, 1e-8);
        assert!(kkt_residual(&lp, &st, &reduced) <= 1e-8);
    }
}

/// `A_k1` restricted to the coupling columns of block `k`, with those columns.
fn coupling_blocks(lp: &StandardFormLP, s: &BlockStructure, k: usize) -> (Vec<usize>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let a = lp.a.to_dense();
    let blk = &s.blocks[k];
    let cols = s.coupling_support(&lp.a)[k].clone();
    let first = s.first_rows();
    let pick = |rows: &[usize]| -> Vec<Vec<f64>> { rows.iter().map(|&i| cols.iter().map(|&j| a[i][j]).collect()).collect() };
    (cols.clone(), pick(&first), pick(&blk.rows))
}

#[test]
fn coupling_products_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for trial in 0..6 {
        let dim = 3 + trial;
        let specs = [dense_spec(6 + trial, 1 + trial % 3, dim, &mut rng), dense_spec(5, 2, dim, &mut rng)];
        let mut base = boxed_base(dim);
        base.linear.push(blockipm::model::LinearConstraint {
            coeffs: (0..dim).map(|j| (j, 1.0)).collect(),
            rhs: 5.0,
        });
        let mut specs = specs.to_vec();
        // A second coupling column in the first block.
        specs[0].h = vec![(0, 0.5)];
        let lp = build_cpl(&base, &specs).unwrap();
        let s = detect_structure(&lp.a, &DetectionParams::new(3, 12, false).unwrap());
        assert!(!s.blocks.is_empty());
        let ws = ReducedWorkspace::new(&lp.a, &s).unwrap();
        let w: Vec<f64> = (0..lp.n()).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();
        let a = lp.a.to_dense();
        for k in 0..s.blocks.len() {
            let (cols, u, y) = coupling_blocks(&lp, &s, k);
            let wj: Vec<f64> = cols.iter().map(|&c| w[c]).collect();
            let blk = &s.blocks[k];
            let delta: Vec<f64> = blk
                .rows
                .iter()
                .map(|&i| blk.diag_cols.iter().map(|&c| a[i][c] * a[i][c] * w[c]).sum())
                .collect();

            // V Vᵀ against A_k1 W A_k1ᵀ.
            let v = ws.coupling_factor(k, &w);
            let p = cols.len();
            for r in 0..y.len() {
                for q in 0..y.len() {
                    let got: f64 = (0..p).map(|j| v[r * p + j] * v[q * p + j]).sum();
                    let want: f64 = (0..p).map(|j| y[r][j] * wj[j] * y[q][j]).sum();
                    assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "VVᵀ[{r},{q}]");
                }
            }

            // U W Yᵀ Δ⁻¹ Y W Uᵀ, formed densely.
            let uw: Vec<Vec<f64>> = u.iter().map(|row| row.iter().zip(&wj).map(|(a, b)| a * b).collect()).collect();
            let left: Vec<Vec<f64>> = uw
                .iter()
                .map(|row| (0..y.len()).map(|r| (0..p).map(|j| row[j] * y[r][j]).sum::<f64>() / delta[r].sqrt()).collect())
                .collect();
            let term = ws.coupling_term(k, &w).unwrap();
            let scale = left.iter().flatten().fold(0.0f64, |m, v| m.max(v * v)).max(1.0);
            for i in 0..u.len() {
                for jj in 0..u.len() {
                    let want: f64 = left[i].iter().zip(&left[jj]).map(|(a, b)| a * b).sum();
                    assert!((term.get(i, jj) - want).abs() <= 1e-10 * scale, "T1[{i},{jj}]");
                }
            }
        }
    }
}

#[test]
fn starting_point_shifts_the_least_squares_solutions() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..5 {
        let lp = random_dense_lp(4, 9, &mut rng);
        let a = lp.a.to_dense();
        let gram: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|k| a[i].iter().zip(&a[k]).map(|(u, v)| u * v).sum()).collect()).collect();
        let x_ls = matvec_t(&a, &dense_solve(&gram, &lp.b).unwrap());
        let y_ls = dense_solve(&gram, &matvec(&a, &lp.c)).unwrap();
        let s_ls: Vec<f64> = lp.c.iter().zip(matvec_t(&a, &y_ls)).map(|(c, v)| c - v).collect();
        let shift = |v: &[f64]| {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = v.iter().map(|e| e.abs()).sum::<f64>() / v.len() as f64;
            (-1.5 * min).max(0.0) + 0.1 * (1.0 + mean)
        };
        let st = starting_point(&lp).unwrap();
        let (dx, ds) = (shift(&x_ls), shift(&s_ls));
        for j in 0..lp.n() {
            assert!((st.x[j] - x_ls[j] - dx).abs() < 1e-10);
            assert!((st.s[j] - s_ls[j] - ds).abs() < 1e-10);
        }
        assert!(st.x.iter().chain(&st.s).all(|&v| v > 0.0));
        // The primal residual is exactly the one created by the shift.
        let ae = matvec(&a, &vec![dx; lp.n()]);
        for i in 0..lp.m() {
            assert!((st.r_primal[i] + ae[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn residuals_match_direct_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(89);
    let lp = random_dense_lp(5, 12, &mut rng);
    let st = random_state(&lp, &mut rng, 1.0, 0.7);
    let r = compute_residuals(&lp, &st).unwrap();
    let a = lp.a.to_dense();
    let ax = matvec(&a, &st.x);
    let aty = matvec_t(&a, &st.y);
    for i in 0..lp.m() {
        assert!((r.r_primal[i] - (lp.b[i] - ax[i])).abs() < 1e-14);
    }
    for j in 0..lp.n() {
        assert!((r.r_dual[j] - (lp.c[j] - aty[j] - st.s[j])).abs() < 1e-14);
        assert!((r.r_comp[j] - (0.7 - st.x[j] * st.s[j])).abs() < 1e-14);
    }

    let mut bad = st.clone();
    bad.x.pop();
    assert!(matches!(compute_residuals(&lp, &bad), Err(IpmError::DimensionMismatch { .. })));
}

#[test]
fn optimal_pair_has_zero_residuals() {
    // min x₁ + 2x₂ s.t. x₁ + x₂ = 1: x = (1, 0), y = 1, s = (0, 1).
    let lp = StandardFormLP::from_dense(&[vec![1.0, 1.0]], &[1.0], &[1.0, 2.0]).unwrap();
    let st = IpmState::new(&lp, vec![1.0, 0.0], vec![1.0], vec![0.0, 1.0], 0.0).unwrap();
    let r = compute_residuals(&lp, &st).unwrap();
    assert!(r.r_primal.iter().chain(&r.r_dual).chain(&r.r_comp).all(|v| v.abs() <= 1e-12));
}

proptest! {
    #[test]
    fn barrier_ratio_is_within_sigma_bounds(
        xs in proptest::collection::vec((1e-6f64..1e3, 1e-6f64..1e3), 1..30),
        gap in 1e-12f64..1e3,
        prev in proptest::option::of(1e-12f64..1e3),
    ) {
        let opts = IpmOptions::default();
        let sigma = centering_sigma(gap, prev, &opts);
        prop_assert!((opts.sigma_min..=opts.sigma_max).contains(&sigma));
        let (x, s): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
        let avg = x.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64;
        let ratio = barrier_update(&x, &s, sigma) / avg;
        prop_assert!(ratio >= opts.sigma_min * (1.0 - 1e-12) && ratio <= opts.sigma_max * (1.0 + 1e-12));
    }

    #[test]
    fn step_keeps_iterates_positive(
        v in proptest::collection::vec((1e-3f64..10.0, -10.0f64..10.0, 1e-3f64..10.0, -10.0f64..10.0), 1..20),
    ) {
        let x: Vec<f64> = v.iter().map(|e| e.0).collect();
        let dx: Vec<f64> = v.iter().map(|e| e.1).collect();
        let s: Vec<f64> = v.iter().map(|e| e.2).collect();
        let ds: Vec<f64> = v.iter().map(|e| e.3).collect();
        let alpha = step_length(&x, &s, &dx, &ds, 0.99995);
        prop_assert!(alpha > 0.0 && alpha <= 1.0);
        for j in 0..x.len() {
            prop_assert!(x[j] + alpha * dx[j] > 0.0 && s[j] + alpha * ds[j] > 0.0);
        }
    }
}

/// Feasible, bounded `Ax = b, x ≥ 0` with a positive first row.
fn bounded_lp(rng: &mut ChaCha8Rng, m: usize, n: usize) -> StandardFormLP {
    let mut a = vec![(0..n).map(|_| rng.random_range(1..=3) as f64).collect::<Vec<_>>()];
    a.extend((1..m).map(|_| (0..n).map(|_| rng.random_range(-3..=3) as f64).collect()));
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(1..=3) as f64).collect();
    let b = matvec(&a, &x0);
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=5) as f64).collect();
    StandardFormLP::from_dense(&a, &b, &c).unwrap()
}

#[test]
fn iterates_stay_positive_along_the_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(144);
    let opts = IpmOptions::default();
    for _ in 0..5 {
        let lp = bounded_lp(&mut rng, 3, 7);
        let mut st = starting_point(&lp).unwrap();
        let mut prev = None;
        for _ in 0..25 {
            let gap = st.gap();
            st.mu = barrier_update(&st.x, &st.s, centering_sigma(gap, prev, &opts));
            st.refresh(&lp).unwrap();
            let Ok(d) = direction_full(&lp, &st) else { break };
            let alpha = step_length(&st.x, &st.s, &d.dx, &d.ds, opts.step_factor);
            for (v, dv) in [(&mut st.x, &d.dx), (&mut st.y, &d.dy), (&mut st.s, &d.ds)] {
                v.iter_mut().zip(dv).for_each(|(a, b)| *a += alpha * b);
            }
            assert!(st.x.iter().chain(&st.s).all(|&v| v > 0.0));
            prev = Some(gap);
        }
    }
}

#[test]
fn optimal_solves_match_vertex_oracle_and_certify_the_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(233);
    let opts = IpmOptions::default();
    for _ in 0..25 {
        let m = rng.random_range(1..=4);
        let n = rng.random_range(m + 1..=8);
        let lp = bounded_lp(&mut rng, m, n);
        let (expected, _) = vertex_min(&lp.a.to_dense(), &lp.b, &lp.c).unwrap();
        let r = solve(&lp, None, &opts).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective - expected).abs() <= 1e-6 * (1.0 + expected.abs()), "{} vs {expected}", r.objective);
        let cx: f64 = lp.c.iter().zip(&r.x).map(|(c, x)| c * x).sum();
        let by: f64 = lp.b.iter().zip(&r.y).map(|(b, y)| b * y).sum();
        assert!((cx - by).abs() <= 10.0 * opts.eps_c * (1.0 + cx.abs()), "gap {}", cx - by);
        assert!(r.x.iter().chain(&r.s).all(|&v| v > 0.0));
    }
}

#[test]
fn backends_agree_on_cpl_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(377);
    for _ in 0..3 {
        let lp = build_cpl(&boxed_base(6), &[dense_spec(30, 2, 6, &mut rng), dense_spec(20, 3, 6, &mut rng)]).unwrap();
        let run = |backend| {
            let r = solve(&lp, None, &IpmOptions { backend, ..IpmOptions::default() }).unwrap();
            assert_eq!(r.status, Status::Optimal);
            r
        };
        let full = run(Backend::Full);
        let reduced = run(Backend::Reduced);
        assert_eq!(reduced.structure.k_blocks, 3);
        assert!(reduced.structure.m1 < lp.m());
        assert!((full.objective - reduced.objective).abs() <= 1e-6 * (1.0 + full.objective.abs()));
    }
}

#[test]
fn unsupported_structure_is_rejected() {
    let (lp, mut s) = scalar_instance(&mut ChaCha8Rng::seed_from_u64(1));
    // Column 0 spans every block row, so it cannot be diagonal.
    s.blocks[0].diag_cols = vec![0, 1, 2, 3, 4];
    assert!(matches!(ReducedWorkspace::new(&lp.a, &s), Err(IpmError::StructureViolation(_))));
}
