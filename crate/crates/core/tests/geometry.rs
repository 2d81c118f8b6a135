use hypertorus::geometry::{random_sites, reduce, Dims, Site, UnitVector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn rotation(seed: u64, n: usize) -> DMatrix<f64> {
    let mut rng = hypertorus::seeding::rng_from_seed(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    a.qr().q()
}

fn rotate(q: &DMatrix<f64>, x: &UnitVector) -> UnitVector {
    UnitVector::new((q * DVector::from_column_slice(x.coords())).iter().copied().collect()).unwrap()
}

fn dims() -> impl Strategy<Value = Dims> {
    (1u32..5, 1u32..5, 1u32..4).prop_map(|(a, b, c)| Dims::new(a, b, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reduce_is_symmetric(dims in dims(), seed in any::<u64>()) {
        let s = random_sites(seed, 2, dims, 3.0);
        prop_assert_eq!(reduce(&s[0], &s[1]).unwrap(), reduce(&s[1], &s[0]).unwrap());
    }

    #[test]
    fn reduce_is_invariant_under_rotation_and_translation(dims in dims(), seed in any::<u64>(), shift in prop::collection::vec(-5.0f64..5.0, 3)) {
        let s = random_sites(seed, 2, dims, 3.0);
        let q1 = rotation(seed ^ 1, dims.d1 as usize + 1);
        let q2 = rotation(seed ^ 2, dims.d2 as usize + 1);
        let moved: Vec<Site> = s
            .iter()
            .map(|x| {
                let u = x.u.iter().zip(&shift).map(|(a, b)| a + b).collect();
                Site::new(rotate(&q1, &x.x1), rotate(&q2, &x.x2), u).unwrap()
            })
            .collect();
        let (a, b) = (reduce(&s[0], &s[1]).unwrap(), reduce(&moved[0], &moved[1]).unwrap());
        prop_assert!((a.s - b.s).abs() < 1e-9 && (a.r - b.r).abs() < 1e-9 && (a.h - b.h).abs() < 1e-9, "{a:?} {b:?}");
    }
}
