use hypermeasure::systems::*;
use proptest::prelude::*;

fn torus_gap(a: &Point, b: &Point) -> f64 {
    let (Point::Torus { x: x1, y: y1 }, Point::Torus { x: x2, y: y2 }) = (a, b) else { panic!() };
    circle_delta(*x1, *x2).abs().max(circle_delta(*y1, *y2).abs())
}

proptest! {
    #[test]
    fn cat_round_trip(x in 0.0..1.0f64, y in 0.0..1.0f64, n in 1i64..=6) {
        let sys = System::cat_map();
        let p = Point::torus(x, y);
        let q = sys.apply(&sys.apply(&p, n).unwrap(), -n).unwrap();
        prop_assert!(torus_gap(&p, &q) < 1e-12);
    }

    #[test]
    fn solenoid_round_trip(theta in 0.0..std::f64::consts::TAU, history in any::<u64>(), n in 1i64..=6) {
        let sys = System::solenoid();
        let p = sys.attractor_point(theta, history).unwrap();
        let q = sys.apply(&sys.apply(&p, n).unwrap(), -n).unwrap();
        prop_assert!(sys.metric(&p, &q).unwrap() < 1e-12);
    }

    #[test]
    fn horseshoe_round_trip(fut in prop::collection::vec(0u8..2, 30), past in prop::collection::vec(0u8..2, 30), n in 1i64..=6) {
        let sys = System::horseshoe(0.25, 3.0).unwrap();
        let p = sys.horseshoe_coded(&fut, &past).unwrap();
        let q = sys.apply(&sys.apply(&p, n).unwrap(), -n).unwrap();
        prop_assert!(sys.metric(&p, &q).unwrap() < 1e-12);
    }

    #[test]
    fn cat_leaves_contract(x in 0.0..1.0f64, y in 0.0..1.0f64, s in -0.05..0.05f64) {
        let sys = System::cat_map();
        let p = Point::torus(x, y);
        for (dir, steps) in [(cat_stable(), 1), (cat_unstable(), -1)] {
            let q = Point::torus(x + s * dir[0], y + s * dir[1]);
            let d0 = sys.metric(&p, &q).unwrap();
            let d1 = sys.metric(&sys.apply(&p, steps).unwrap(), &sys.apply(&q, steps).unwrap()).unwrap();
            prop_assert!(d1 <= sys.lambda() * d0 * (1.0 + 1e-9) + 1e-15);
        }
    }

    #[test]
    fn trig_potential_is_lipschitz(a in prop::array::uniform4(0.0..1.0f64), k in -3i32..=3, l in -3i32..=3) {
        let sys = System::cat_map();
        let phi = Potential::trig(0.7, k, l);
        let (p, q) = (Point::torus(a[0], a[1]), Point::torus(a[2], a[3]));
        let gap = (phi.eval(&sys, &p).unwrap() - phi.eval(&sys, &q).unwrap()).abs();
        let d = sys.metric(&p, &q).unwrap();
        prop_assert!(gap <= phi.holder_seminorm(&sys) * d.powf(phi.holder_exponent()) + 1e-12);
    }

    #[test]
    fn bowen_balls_are_cylinders(w in prop::collection::vec(0u8..2, 48), j in -8i64..28, n in 1usize..=20, r in 0.51..0.99f64) {
        let sys = System::full_shift(2).unwrap();
        let a = SymbolWord::new(2, w.clone(), 20).unwrap();
        let mut v = w;
        let pos = (20 + j) as usize;
        v[pos] ^= 1;
        let b = SymbolWord::new(2, v, 20).unwrap();
        let inside = sys.bowen_ball_contains(&Point::Word(a), r, n, &Point::Word(b)).unwrap();
        prop_assert_eq!(inside, !(0..n as i64).contains(&j));
    }
}

#[test]
fn horseshoe_survivors_are_strips() {
    for beta in [3.0, 4.0] {
        let sys = System::horseshoe(0.25, beta).unwrap();
        for n in 1..=12 {
            let left = cantor_points(beta, n, 0.0, 1.0);
            assert_eq!(left.len(), 1 << n);
            let width = beta.powi(-(n as i32));
            let survives = |x: f64| -> bool {
                matches!(sys.apply(&Point::horseshoe(x, 0.5), n as i64), Ok(Point::Horseshoe { escaped: false, .. }))
            };
            for (i, &a) in left.iter().enumerate() {
                assert!(survives(a + 0.5 * width));
                // every gap between consecutive strips escapes
                if let Some(&b) = left.get(i + 1) {
                    assert!(b - a > width + 1e-12);
                    assert!(!survives(0.5 * (a + width + b)));
                }
            }
        }
    }
}
