use latmin::enumeration::{effective_sections, h0_hat, h0_hat_sef, strictly_effective_sections, EnumConfig};
use latmin::exact::{int, rat, LogReal, Rational};
use latmin::minima::successive_minima;
use latmin::norm::BaseValue;
use latmin::{NormSpec, NormedModule};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use std::cmp::Ordering;

fn cfg() -> EnumConfig {
    EnumConfig::with_budget(2_000_000)
}

/// `AᵀA + I`, scaled by `num/den`.
fn ellipsoid(rank: usize, a: &[i64], num: i64, den: i64) -> NormedModule {
    let s = rat(num, den);
    let gram: Vec<Vec<Rational>> = (0..rank)
        .map(|i| {
            (0..rank)
                .map(|j| {
                    let dot: i64 = (0..rank).map(|k| a[k * rank + i] * a[k * rank + j]).sum();
                    int(dot + (i == j) as i64) * &s
                })
                .collect()
        })
        .collect();
    NormedModule::new(rank, NormSpec::Ellipsoid { gram }).unwrap()
}

/// Unit-diagonal upper-triangular functionals plus one extra row, scaled by `1/den`.
fn polymax(rank: usize, a: &[i64], den: i64) -> NormedModule {
    let mut functionals: Vec<Vec<Rational>> = (0..rank)
        .map(|i| {
            (0..rank)
                .map(|j| match i.cmp(&j) {
                    Ordering::Equal => rat(1, den),
                    Ordering::Less => rat(a[i * rank + j], den),
                    Ordering::Greater => int(0),
                })
                .collect()
        })
        .collect();
    functionals.push((0..rank).map(|j| rat(a[j * rank + (rank - 1 - j)] + 1, den)).collect());
    NormedModule::new(rank, NormSpec::PolyMax { functionals }).unwrap()
}

fn module_strategy() -> impl Strategy<Value = NormedModule> {
    (1usize..=3, prop::collection::vec(-2i64..=2, 9), 1i64..=4, 1i64..=12, any::<bool>()).prop_map(
        |(rank, a, num, den, ell)| {
            if ell {
                ellipsoid(rank, &a, num, den)
            } else {
                polymax(rank, &a, den.min(5))
            }
        },
    )
}

fn alpha_strategy() -> impl Strategy<Value = Rational> {
    (-4i64..=8, 1i64..=4).prop_map(|(p, q)| rat(p, q))
}

fn vector(m: &NormedModule, raw: &[i64]) -> Vec<i64> {
    raw[..m.rank()].to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_symmetric(m in module_strategy(), raw in prop::collection::vec(-20i64..=20, 3)) {
        let v = vector(&m, &raw);
        let neg: Vec<i64> = v.iter().map(|x| -x).collect();
        prop_assert_eq!(m.norm_eval(&v).unwrap(), m.norm_eval(&neg).unwrap());
    }

    #[test]
    fn norm_is_homogeneous(m in module_strategy(), raw in prop::collection::vec(-20i64..=20, 3), k in -6i64..=6) {
        let v = vector(&m, &raw);
        let kv: Vec<i64> = v.iter().map(|x| k * x).collect();
        let (a, b) = (m.norm_eval(&v).unwrap(), m.norm_eval(&kv).unwrap());
        match (a.base, b.base) {
            (BaseValue::Squared(x), BaseValue::Squared(y)) => prop_assert_eq!(y, x * int(k * k)),
            (BaseValue::Linear(x), BaseValue::Linear(y)) => prop_assert_eq!(y, x * int(k.abs())),
            _ => prop_assert!(false, "base kind changed"),
        }
    }

    #[test]
    fn twists_add(m in module_strategy(), a in alpha_strategy(), b in alpha_strategy()) {
        let two = m.twist(&a).twist(&b);
        let one = m.twist(&(&a + &b));
        prop_assert_eq!(two.alpha(), one.alpha());
        prop_assert_eq!(m.norm_eval(&vec![1; m.rank()]).unwrap().alpha + &a + &b,
            two.norm_eval(&vec![1; m.rank()]).unwrap().alpha);
        if let (Ok(x), Ok(y)) = (h0_hat(&two, &cfg()), h0_hat(&one, &cfg())) {
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn counts_grow_with_twist(m in module_strategy(), a in alpha_strategy(), step in 0i64..=6) {
        let lo = m.twist(&a);
        let hi = m.twist(&(&a + rat(step, 4)));
        if let (Ok(x), Ok(y)) = (effective_sections(&lo, &cfg()), effective_sections(&hi, &cfg())) {
            prop_assert!(x.count <= y.count);
            prop_assert!(x.vectors.iter().all(|v| y.vectors.binary_search(v).is_ok()));
            let s = strictly_effective_sections(&lo, &cfg()).unwrap();
            prop_assert!(s.count <= x.count);
            prop_assert!(h0_hat_sef(&lo, &cfg()).unwrap() <= h0_hat(&lo, &cfg()).unwrap());
        }
    }

    #[test]
    fn minima_shift_by_twist(m in module_strategy(), a in alpha_strategy()) {
        let base = successive_minima(&m, &cfg()).unwrap();
        let tw = successive_minima(&m.twist(&a), &cfg()).unwrap();
        prop_assert_eq!(&base.witnesses, &tw.witnesses);
        for (x, y) in base.mu_exact.iter().zip(&tw.mu_exact) {
            let shifted = x.clone() + LogReal::constant(a.clone());
            prop_assert_eq!(shifted.cmp_exact(y).unwrap(), Ordering::Equal);
        }
        for w in base.lambdas.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn enumeration_matches_box_scan(m in module_strategy(), a in alpha_strategy()) {
        let tw = m.twist(&a);
        let Ok(bounds) = tw.enclosing_box() else { return Ok(()) };
        let b: Vec<i64> = bounds.iter().map(|x| x.to_i64().unwrap()).collect();
        prop_assume!(b.iter().map(|x| 2 * x + 1).product::<i64>() <= 3_000);
        let mut closed = Vec::new();
        let mut open = Vec::new();
        let mut v = b.iter().map(|x| -x).collect::<Vec<_>>();
        'scan: loop {
            let val = tw.norm_eval(&v).unwrap();
            if val.le_one().unwrap() {
                closed.push(v.clone());
            }
            if val.lt_one().unwrap() {
                open.push(v.clone());
            }
            for i in (0..v.len()).rev() {
                if v[i] < b[i] {
                    v[i] += 1;
                    for x in v.iter_mut().skip(i + 1).zip(b.iter().skip(i + 1)) {
                        *x.0 = -x.1;
                    }
                    continue 'scan;
                }
            }
            break;
        }
        prop_assert_eq!(effective_sections(&tw, &cfg()).unwrap().vectors, closed);
        prop_assert_eq!(strictly_effective_sections(&tw, &cfg()).unwrap().vectors, open);
    }
}
