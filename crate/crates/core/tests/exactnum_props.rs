use earac::ExactValue;
use proptest::prelude::*;

fn value() -> impl Strategy<Value = ExactValue> {
    prop::array::uniform4((-40i64..40, 1i64..12)).prop_map(|c| {
        ExactValue::ratio(c[0].0, c[0].1)
            + ExactValue::ratio(c[1].0, c[1].1) * ExactValue::sqrt2()
            + ExactValue::ratio(c[2].0, c[2].1) * ExactValue::sqrt3()
            + ExactValue::ratio(c[3].0, c[3].1) * ExactValue::sqrt6()
    })
}

proptest! {
    #[test]
    fn ring_axioms(a in value(), b in value(), c in value()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
        prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
        prop_assert_eq!(&a - &a, ExactValue::zero());
        prop_assert_eq!(&a * ExactValue::one(), a.clone());
    }

    #[test]
    fn order_agrees_with_floats(a in value(), b in value()) {
        let (x, y) = (a.to_f64(), b.to_f64());
        if (x - y).abs() > 1e-9 {
            prop_assert_eq!(a.cmp(&b), x.partial_cmp(&y).unwrap());
        }
        prop_assert_eq!(a.cmp(&b), (&a - &b).signum());
    }

    #[test]
    fn decimals_agree_with_floats(a in value()) {
        let d: f64 = a.to_decimal_string(12).parse().unwrap();
        prop_assert!((d - a.to_f64()).abs() < 1e-9);
    }

    #[test]
    fn text_round_trips(a in value()) {
        let parsed: ExactValue = a.to_string().parse().unwrap();
        prop_assert_eq!(parsed, a);
    }

    #[test]
    fn advantage_is_multiplicative(k1 in 0u32..8, j1 in 0u32..8, k2 in 0u32..8, j2 in 0u32..8) {
        prop_assert_eq!(
            ExactValue::delta(k1, j1) * ExactValue::delta(k2, j2),
            ExactValue::delta(k1 + k2, j1 + j2)
        );
    }
}
