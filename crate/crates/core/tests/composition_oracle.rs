//! Series/parallel composition and diagram evaluation against exhaustive
//! implementation enumeration.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{chain_oracle, parallel_oracle, pt, random_catalog};
use mobility_codesign::diagram::DiagramBuilder;
use mobility_codesign::dp::DesignProblem;
use mobility_codesign::poset::Point;

fn random_query_point(rng: &mut ChaCha8Rng, arity: usize) -> Point {
    Point::from_values(&(0..arity).map(|_| rng.gen_range(0..5) as f64).collect::<Vec<_>>())
}

#[test]
fn series_chains_match_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e21e5);
    for case in 0..500 {
        let depth = if case % 2 == 0 { 2 } else { 3 };
        // Random link arities; consecutive problems must agree.
        let arities: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=2usize)).collect();
        let catalogs: Vec<_> = (0..depth)
            .map(|i| random_catalog(&mut rng, arities[i], arities[i + 1]))
            .collect();

        let mut dp = DesignProblem::from_catalog("c0", arities[0], arities[1], catalogs[0].clone())
            .unwrap();
        for (i, cat) in catalogs.iter().enumerate().skip(1) {
            let next =
                DesignProblem::from_catalog(format!("c{i}"), arities[i], arities[i + 1], cat.clone())
                    .unwrap();
            dp = dp.series(next).unwrap();
        }

        let f = random_query_point(&mut rng, arities[0]);
        let got = dp.query(&f).unwrap().antichain();
        let refs: Vec<&[mobility_codesign::dp::Implementation]> =
            catalogs.iter().map(|c| c.as_slice()).collect();
        let want = chain_oracle(&refs, &f);
        assert_eq!(got.points(), want.as_slice(), "case {case}, f = {f:?}");
    }
}

#[test]
fn parallel_pairs_match_product_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11e1);
    for case in 0..500 {
        let (fa1, ra1) = (rng.gen_range(1..=2usize), rng.gen_range(1..=2usize));
        let (fa2, ra2) = (rng.gen_range(1..=2usize), rng.gen_range(1..=2usize));
        let c1 = random_catalog(&mut rng, fa1, ra1);
        let c2 = random_catalog(&mut rng, fa2, ra2);
        let dp = DesignProblem::from_catalog("l", fa1, ra1, c1.clone())
            .unwrap()
            .parallel(DesignProblem::from_catalog("r", fa2, ra2, c2.clone()).unwrap());

        let f1 = random_query_point(&mut rng, fa1);
        let f2 = random_query_point(&mut rng, fa2);
        let got = dp.query(&f1.concat(&f2)).unwrap().antichain();
        let want = parallel_oracle(&c1, &c2, &f1, &f2);
        assert_eq!(got.points(), want.as_slice(), "case {case}");
    }
}

#[test]
fn diagram_chains_match_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1a6);
    for case in 0..250 {
        let depth = rng.gen_range(2..=3usize);
        let arities: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=2usize)).collect();
        let catalogs: Vec<_> = (0..depth)
            .map(|i| random_catalog(&mut rng, arities[i], arities[i + 1]))
            .collect();

        let mut b = DiagramBuilder::new();
        let units: Vec<Vec<String>> = arities
            .iter()
            .enumerate()
            .map(|(i, &a)| (0..a).map(|k| format!("u{i}_{k}")).collect())
            .collect();
        let mut ids = Vec::new();
        for (i, cat) in catalogs.iter().enumerate() {
            let fun: Vec<&str> = units[i].iter().map(|s| s.as_str()).collect();
            let res: Vec<&str> = units[i + 1].iter().map(|s| s.as_str()).collect();
            let dp = DesignProblem::from_catalog(
                format!("n{i}"),
                arities[i],
                arities[i + 1],
                cat.clone(),
            )
            .unwrap();
            ids.push(b.add_node(dp, &fun, &res));
        }
        for k in 0..arities[0] {
            b.expose_source((ids[0], k));
        }
        for i in 1..depth {
            for k in 0..arities[i] {
                b.connect((ids[i - 1], k), (ids[i], k));
            }
        }
        for k in 0..arities[depth] {
            b.expose_sink((ids[depth - 1], k));
        }
        let diagram = b.build().unwrap();

        let f = random_query_point(&mut rng, arities[0]);
        let records = diagram.solve(f.coords()).unwrap();
        let got: Vec<Point> = records.iter().map(|r| r.resources.clone()).collect();
        let refs: Vec<&[mobility_codesign::dp::Implementation]> =
            catalogs.iter().map(|c| c.as_slice()).collect();
        let want = chain_oracle(&refs, &f);
        assert_eq!(got, want, "case {case}, f = {f:?}");

        // Every record replays to its own resources.
        for r in &records {
            assert_eq!(diagram.replay(f.coords(), r).unwrap(), r.resources);
        }
    }
}

#[test]
fn two_stage_example_picks_the_cheap_chain() {
    use mobility_codesign::dp::Implementation;
    let dp1 = DesignProblem::from_catalog(
        "d1",
        1,
        1,
        vec![
            Implementation::new("a1", pt(&[1.0]), pt(&[1.0])),
            Implementation::new("a2", pt(&[1.0]), pt(&[2.0])),
        ],
    )
    .unwrap();
    let dp2 = DesignProblem::from_catalog(
        "d2",
        1,
        1,
        vec![
            Implementation::new("b1", pt(&[1.0]), pt(&[10.0])),
            Implementation::new("b2", pt(&[2.0]), pt(&[5.0])),
        ],
    )
    .unwrap();
    let s = dp1.series(dp2).unwrap();
    let front = s.query(&pt(&[1.0])).unwrap();
    assert_eq!(front.len(), 1);
    assert_eq!(front.entries()[0].resources, pt(&[5.0]));
    assert_eq!(front.entries()[0].provenance.describe(), "a1;b2");
}
