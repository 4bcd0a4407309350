use legrec::oracle::OracleSession;
use legrec::quantum::{choose_k, gram_matrix, povm_alpha};
use legrec::reconstruct::{stage1_survivors, RecoverOptions};
use legrec::{Budget, MonicPoly, PrimeModulus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn stage1_survivors_scale_like_sqrt_p_log_p() {
    let mut ratios = Vec::new();
    for p in [101u64, 1009, 10007] {
        let m = PrimeModulus::new(p).unwrap();
        let worst = (0..100u64)
            .map(|seed| {
                let f = MonicPoly::random_squarefree(m, 1, &mut ChaCha8Rng::seed_from_u64(seed));
                let s = OracleSession::exact(f).unwrap();
                stage1_survivors(&s, 1, &RecoverOptions::default())
                    .unwrap()
                    .len()
            })
            .max()
            .unwrap();
        let pf = p as f64;
        ratios.push(worst as f64 / (pf.sqrt() * pf.ln()));
    }
    assert!(ratios.iter().all(|&r| r <= 1.0), "{ratios:?}");
}

#[test]
fn quantum_failure_probability_is_order_one_over_p() {
    let k = choose_k(1, 0.5).unwrap();
    for p in [101u64, 251, 1009] {
        let g = gram_matrix(PrimeModulus::new(p).unwrap(), 1, k, Budget::default()).unwrap();
        let r = povm_alpha(&g).unwrap();
        assert!((1.0 - r.alpha) * p as f64 <= 10.0, "p={p}");
        assert!(r.alpha * r.lambda_max <= 1.0);
    }
}
