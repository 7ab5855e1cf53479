use jetcalc_core::chart::{make_chart, BundleSpec, CoordMap, SpaceKind};
use jetcalc_core::expr::Expr;
use jetcalc_core::forms::{forms_equivalent, pullback, DiffForm};
use jetcalc_core::rng::SplitMix64;
use std::time::Instant;

fn random_poly(rng: &mut SplitMix64, chart: &jetcalc_core::Chart, terms: usize, degree: u32) -> Expr {
    let mut acc = Expr::int((rng.next_u64() % 7) as i64 - 3);
    for _ in 0..terms {
        let mut term = Expr::int((rng.next_u64() % 7) as i64 - 3);
        for _ in 0..degree {
            let coord = chart.coord((rng.next_u64() % chart.dim() as u64) as usize);
            term = term * Expr::var(coord);
        }
        acc = acc + term;
    }
    acc
}

fn random_form(rng: &mut SplitMix64, chart: &jetcalc_core::Chart, degree: usize, terms: usize) -> DiffForm {
    let mut form = DiffForm::zero(chart.clone(), degree).unwrap();
    let dim = chart.dim();
    for _ in 0..terms {
        let mut indices: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            indices.swap(i, j);
        }
        indices.truncate(degree);
        indices.sort_unstable();
        let mut basis = DiffForm::scalar(chart.clone(), random_poly(rng, chart, 2, 2));
        for &idx in &indices {
            basis = basis.wedge(&DiffForm::basis_one_form(chart.clone(), idx)).unwrap();
        }
        form = form.add(&basis).unwrap();
    }
    form
}

fn main() {
    let spec = BundleSpec::new(3, 2).unwrap();
    let chart = make_chart(SpaceKind::MPi, &spec);
    let mut rng = SplitMix64::new(99);
    let a = random_form(&mut rng, &chart, 2, 2);
    let b = random_form(&mut rng, &chart, 2, 2);
    let components: Vec<Expr> = (0..chart.dim()).map(|_| random_poly(&mut rng, &chart, 2, 2)).collect();
    let map = CoordMap::new(chart.clone(), chart.clone(), components).unwrap();

    let t = Instant::now(); let ab = a.wedge(&b).unwrap(); println!("wedge: {:?}", t.elapsed());
    let t = Instant::now(); let _da = a.d().unwrap(); println!("d: {:?}", t.elapsed());
    let t = Instant::now(); let pa = pullback(&map, &a).unwrap(); println!("pullback a (deg 2): {:?}", t.elapsed());
    let t = Instant::now(); let pab = pullback(&map, &ab).unwrap(); println!("pullback ab (deg 4): {:?}", t.elapsed());
    let t = Instant::now(); let pb = pullback(&map, &b).unwrap(); let w = pa.wedge(&pb).unwrap(); println!("pullback b + wedge: {:?}", t.elapsed());
    let t = Instant::now(); let v = forms_equivalent(&pab, &w, 2, 1e-9, 0).unwrap(); println!("equiv: {:?} -> {:?}", t.elapsed(), v);
}
