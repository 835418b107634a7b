use super::*;
use crate::maps::MapKind;
use crate::spaces::BaseSetSpec;

fn line() -> SpaceDescriptor {
    SpaceDescriptor::euclidean(1)
}

fn doubling() -> MapDescriptor {
    MapDescriptor::new(MapKind::Homothety { factor: 2.0 }, line()).unwrap()
}

fn g_map() -> MapDescriptor {
    MapDescriptor::new(MapKind::ConjugatedDoubling, SpaceDescriptor::Halfplane).unwrap()
}

fn orbit1(xs: &[f64], delta: f64) -> PseudoOrbit {
    PseudoOrbit::new(xs.iter().map(|x| Point::at(&[*x])).collect(), delta)
}

fn ladder(n: usize, delta: f64, last_x: f64) -> PseudoOrbit {
    let mut pts: Vec<Point> = (0..n).map(|i| Point::at(&[0.0, i as f64 * delta])).collect();
    pts.push(Point::at(&[last_x, (n - 1) as f64 * delta]));
    PseudoOrbit::new(pts, delta)
}

#[test]
fn true_orbit_is_valid() {
    let f = doubling();
    let o = orbit1(&[0.3, 0.6, 1.2], 0.01);
    assert_eq!(validate(&f, &o), Validity { valid: true, first_violation: None });
}

#[test]
fn e1_ladder_is_valid() {
    let g = g_map();
    let o = ladder(6, 2.0, 1.0);
    assert!(validate(&g, &o).valid);
}

#[test]
fn doubling_violation_index() {
    let o = orbit1(&[1.0, 2.0, 10.0], 2.0);
    assert_eq!(validate(&doubling(), &o).first_violation, Some(1));
}

#[test]
fn non_member_is_invalid() {
    let g = g_map();
    let o = PseudoOrbit::new(vec![Point::at(&[0.0, 0.0]), Point::at(&[0.0, -0.5])], 1.0);
    assert!(!validate(&g, &o).valid);
}

#[test]
fn orbit_distance_examples() {
    let s = line();
    let a = orbit1(&[0.0, 1.0, 2.0], 1.0);
    assert_eq!(orbit_distance(&s, &a, &a).unwrap(), 0.0);
    let b = orbit1(&[0.0, 3.0, 1.0], 1.0);
    assert_eq!(orbit_distance(&s, &a, &b).unwrap(), 2.0);
    assert!(orbit_distance(&s, &a, &orbit1(&[0.0], 1.0)).is_err());
    let h = SpaceDescriptor::Halfplane;
    let d = orbit_distance(&h, &ladder(4, 2.0, 1.0), &ladder(4, 2.0, -1.0)).unwrap();
    assert_eq!(d, 2.0);
}

#[test]
fn json_line_round_trip() {
    let o = ladder(3, 1.5, -1.0);
    let line = o.to_json_line();
    assert!(line.starts_with("{\"delta\":1.5,\"points\":[[0,0.0,0.0]"));
    let back: PseudoOrbit = serde_json::from_str(&line).unwrap();
    assert_eq!(back, o);
}

#[test]
fn enumerate_examples() {
    let b = Budget::default();
    let id = MapDescriptor::identity(line());
    let x0 = Point::at(&[0.0]);
    assert_eq!(enumerate(&id, &x0, 1, 1.0, 1.0, &b).unwrap().len(), 3);
    assert_eq!(enumerate(&doubling(), &x0, 2, 2.0, 1.0, &b).unwrap().len(), 25);
    let off = Point::at(&[0.5]);
    assert!(enumerate(&id, &off, 1, 0.2, 1.0, &b).unwrap().is_empty());
}

#[test]
fn enumerate_orbits_validate_and_order_is_stable() {
    let b = Budget::default();
    let f = doubling();
    let x0 = Point::at(&[1.0]);
    let a = enumerate(&f, &x0, 3, 2.0, 1.0, &b).unwrap();
    let c = enumerate(&f, &x0, 3, 2.0, 1.0, &b).unwrap();
    assert_eq!(a, c);
    assert!(a.iter().all(|o| validate(&f, o).valid));
    for w in a.windows(2) {
        let key = |o: &PseudoOrbit| o.points.iter().map(|p| p.coords[0]).collect::<Vec<_>>();
        assert!(key(&w[0]) < key(&w[1]));
    }
}

#[test]
fn enumerate_budget() {
    let f = doubling();
    let err = enumerate(&f, &Point::at(&[0.0]), 3, 2.0, 1.0, &Budget::new(100, 1000)).unwrap_err();
    assert!(err.is_budget());
}

#[test]
fn final_terms_doubling() {
    let f = doubling();
    let x0 = Point::at(&[0.0]);
    let set = final_terms_lower(&f, &x0, 3, 2.0, 1.0, &Budget::default()).unwrap();
    let xs: Vec<f64> = set.points.iter().map(|p| p.coords[0]).collect();
    assert_eq!(xs, (-10..=10).map(f64::from).collect::<Vec<_>>());
    assert_eq!(set.provenance, Provenance::Lower);
    for i in 0..set.points.len() {
        assert!(validate(&f, &set.reconstruct(&f, &x0, i).unwrap()).valid);
    }
}

#[test]
fn final_terms_identity() {
    let id = MapDescriptor::identity(line());
    let set = final_terms_lower(&id, &Point::at(&[0.0]), 2, 1.0, 1.0, &Budget::default()).unwrap();
    let xs: Vec<f64> = set.points.iter().map(|p| p.coords[0]).collect();
    assert_eq!(xs, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
}

#[test]
fn final_terms_cone() {
    let space = SpaceDescriptor::cone(2, BaseSetSpec::CantorArc { levels: 3 });
    let f = MapDescriptor::new(MapKind::Homothety { factor: 2.0 }, space).unwrap();
    let x0 = Point::at(&[0.0, 0.0]);
    let set = final_terms_lower(&f, &x0, 2, 4.0, 1.0, &Budget::default()).unwrap();
    assert!(set.points.len() > 20);
    let fine = f.domain.for_spacing(1.0);
    for (i, z) in set.points.iter().enumerate() {
        assert!(fine.contains(z));
        assert!(within(z.coords.iter().map(|c| c * c).sum::<f64>().sqrt(), 12.0));
        let o = set.reconstruct(&f, &x0, i).unwrap();
        assert!(validate(&f.for_spacing(1.0), &o).valid);
    }
}

#[test]
fn final_terms_forward_fallback_matches_image() {
    // A polynomial map has no inverse, so the forward construction runs.
    let f = MapDescriptor::new(MapKind::Polynomial { coeffs: vec![0.0, 2.0], reciprocal: 0.0 }, line()).unwrap();
    let x0 = Point::at(&[0.0]);
    let b = Budget::default();
    let fwd = final_terms_lower(&f, &x0, 3, 2.0, 1.0, &b).unwrap();
    let img = final_terms_lower(&doubling(), &x0, 3, 2.0, 1.0, &b).unwrap();
    assert_eq!(fwd.points, img.points);
    for i in 0..fwd.points.len() {
        assert!(validate(&f, &fwd.reconstruct(&f, &x0, i).unwrap()).valid);
    }
}

#[test]
fn shadow_hull_examples() {
    let x0 = Point::at(&[0.0]);
    for n in 1..6 {
        let h = shadow_hull(&doubling(), &x0, n, 2.0, None).unwrap();
        assert_eq!(h.radius, 2.0);
        assert!((h.axes[0].0 - 2f64.powi(n as i32 + 1)).abs() < 1e-9);
        assert_eq!(h.provenance, Provenance::Upper);
    }
    let m = MapDescriptor::diagonal(&[2.0, 3.0]).unwrap();
    let h = shadow_hull(&m, &Point::at(&[0.0, 0.0]), 3, 1.0, None).unwrap();
    let mut axes: Vec<f64> = h.axes.iter().map(|a| a.0).collect();
    axes.sort_by(f64::total_cmp);
    assert!((axes[0] - 8.0).abs() < 1e-9 && (axes[1] - 27.0).abs() < 1e-9);
    let t = MapDescriptor::diagonal(&[10.0]).unwrap();
    let h = shadow_hull(&t, &x0, 2, 9.0, None).unwrap();
    assert!((h.radius - 1.0).abs() < 1e-12 && (h.axes[0].0 - 100.0).abs() < 1e-9);
}

#[test]
fn shadow_hull_rejects() {
    let x0 = Point::at(&[0.0, 0.0]);
    let c = MapDescriptor::diagonal(&[0.5, 0.5]).unwrap();
    assert!(matches!(shadow_hull(&c, &x0, 2, 1.0, None), Err(Error::Infeasible(_))));
    let m = MapDescriptor::diagonal(&[2.0, 3.0]).unwrap();
    assert!(shadow_hull(&m, &x0, 2, 1.0, Some(2.5)).is_err());
    assert!(shadow_hull(&m, &x0, 2, 1.0, Some(1.5)).is_ok());
    assert!(shadow_hull(&g_map(), &x0, 2, 1.0, None).is_err());
}

#[test]
fn hull_contains_enumerated_final_terms() {
    let b = Budget::default();
    let cases: Vec<(MapDescriptor, Point, usize, f64)> = vec![
        (doubling(), Point::at(&[0.0]), 5, 1.0),
        (doubling(), Point::at(&[1.0]), 5, 2.0),
        (doubling(), Point::at(&[0.0]), 4, 4.0),
        (MapDescriptor::diagonal(&[2.0, 3.0]).unwrap(), Point::at(&[0.0, 0.0]), 4, 1.0),
        (MapDescriptor::linear(vec![vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap(), Point::at(&[1.0, 0.0]), 3, 1.0),
    ];
    for (f, x0, n, delta) in cases {
        let hull = shadow_hull(&f, &x0, n, delta, None).unwrap();
        for o in enumerate(&f, &x0, n, delta, 1.0, &b).unwrap() {
            assert!(hull.contains(o.last()), "{} outside hull", o.last());
        }
    }
}

#[test]
fn subsample_examples() {
    let o = orbit1(&[0.0, 1.0, 3.0, 7.0], 1.0);
    let s = subsample(&o, 1, &ControlFunction::affine(2.0, 0.0)).unwrap();
    assert_eq!(s, o);
    let s = subsample(&o, 3, &ControlFunction::affine(2.0, 0.0)).unwrap();
    assert_eq!(s.delta, 7.0);
    assert_eq!(s.points.len(), 2);
    let o = orbit1(&[0.0; 9], 2.0);
    assert_eq!(subsample(&o, 4, &ControlFunction::identity()).unwrap().delta, 8.0);
    assert!(subsample(&o, 3, &ControlFunction::identity()).is_err());
    assert!(subsample(&o, 0, &ControlFunction::identity()).is_err());
}

#[test]
fn subsample_validates_for_iterate() {
    let f = doubling();
    let b = Budget::default();
    let f2 = MapDescriptor::iterate(&f, 2).unwrap();
    for o in enumerate(&f, &Point::at(&[1.0]), 4, 1.0, 1.0, &b).unwrap() {
        let s = subsample(&o, 2, &ControlFunction::affine(2.0, 0.0)).unwrap();
        assert!(validate(&f2, &s).valid);
    }
}

#[test]
fn push_forward_examples() {
    let id = MapDescriptor::identity(line());
    let o = orbit1(&[0.0, 1.0, 2.0], 1.0);
    let iso = CoarseMapCert::new(id.clone(), ControlFunction::identity()).with_closeness(0.0);
    assert_eq!(push_forward(&o, &iso).unwrap(), o);
    let c = CoarseMapCert::new(id.clone(), ControlFunction::affine(2.0, 1.0)).with_closeness(3.0);
    assert_eq!(push_forward(&orbit1(&[0.0], 2.0), &c).unwrap().delta, 8.0);
    let bare = CoarseMapCert::new(id, ControlFunction::identity());
    assert!(push_forward(&o, &bare).is_err());
}

#[test]
fn push_forward_co4_conjugacy() {
    let dom = SpaceDescriptor::HalfLine { start: 0.0 };
    let cod = SpaceDescriptor::HalfLine { start: 1.0 };
    let f = MapDescriptor::new(MapKind::Polynomial { coeffs: vec![0.0, 2.0, 1.0], reciprocal: 0.0 }, dom.clone()).unwrap();
    let g = MapDescriptor::new(MapKind::Polynomial { coeffs: vec![0.0, 0.0, 1.0], reciprocal: 0.0 }, cod.clone()).unwrap();
    let phi = MapDescriptor::between(
        MapKind::Linear { matrix: vec![vec![1.0]], offset: Some(vec![1.0]) },
        dom,
        cod,
    )
    .unwrap();
    let cert = CoarseMapCert::new(phi, ControlFunction::identity()).with_closeness(0.0);
    let b = Budget::default();
    for o in enumerate(&f, &Point::at(&[1.0]), 2, 1.0, 0.5, &b).unwrap() {
        let p = push_forward(&o, &cert).unwrap();
        assert_eq!(p.delta, 1.0);
        assert!(validate(&g, &p).valid);
    }
}

#[test]
fn base_point_flexibility() {
    let f = doubling();
    let b = Budget::default();
    let x0 = Point::at(&[1.0]);
    let delta = 2.0;
    for y0 in [0.0, 1.0, 2.0, 3.0, 4.0] {
        let y0 = Point::at(&[y0]);
        for o in enumerate(&f, &y0, 2, delta, 1.0, &b).unwrap() {
            let mut pts = vec![x0.clone()];
            pts.extend(o.points);
            assert!(validate(&f, &PseudoOrbit::new(pts, delta)).valid);
        }
    }
}

#[test]
fn drift_family_realizes_ladder() {
    let g = g_map();
    let x0 = Point::at(&[0.0, 0.0]);
    let dir = [0.0, 1.0];
    let mut terms = Vec::new();
    families::visit_drift(&g, &x0, 5, 2.0, 1.0, &dir, &Budget::default(), &mut |z, w| {
        terms.push((z.clone(), w.clone()));
        Ok(())
    })
    .unwrap();
    let xs: Vec<f64> = terms.iter().map(|(z, _)| z.coords[0]).collect();
    let wide = 2.0 * (6f64).exp();
    assert!(xs.iter().cloned().fold(f64::MIN, f64::max) >= wide);
    assert!(xs.iter().cloned().fold(f64::MAX, f64::min) <= -wide);
    for (z, w) in terms.iter().step_by(97) {
        let o = families::drift_orbit(&g, &x0, 5, 2.0, &dir, w, z).unwrap();
        assert!(validate(&g, &o).valid);
    }
}

#[test]
fn axis_items_match_dense_distances_and_orbits() {
    let space = SpaceDescriptor::Bouquet { max_level: 3 };
    let id = MapDescriptor::identity(space.clone());
    let x0 = Point::at(&[0.0]);
    let items = families::axis_items(&id, &x0, 4, 1.0, 1.0, &Budget::default()).unwrap();
    assert_eq!(items.len(), 5 + 2 * (1 + 2 + 4 + 8));
    for a in &items {
        for b in &items {
            let d = space.distance(&a.to_point(), &b.to_point()).unwrap();
            assert!((a.distance(b) - d).abs() < 1e-12);
        }
        let o = families::axis_orbit(&x0, 4, 1.0, a);
        assert_eq!(o.len(), 4);
        assert!(validate(&id, &o).valid);
        assert_eq!(o.last(), &a.to_point());
    }
}
