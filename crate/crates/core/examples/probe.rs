use hilbert_ot::measures::*;
use hilbert_ot::ot::*;
use hilbert_ot::HVec;
fn main() {
    for n in [256usize, 1024] {
        let g: MeasureSpec = GaussianSpec::from_stds(HVec::zeros(6), (0..6).map(|i| 0.5f64.powi(i)).collect()).unwrap().into();
        let xs = g.sample(n, 1).unwrap();
        let ys = g.sample(n, 2).unwrap();
        let t = std::time::Instant::now();
        let a = solve_assignment(&xs, &ys).unwrap();
        let ta = t.elapsed();
        let t = std::time::Instant::now();
        let p = solve_transport(&DiscreteMeasure::empirical(xs).unwrap(), &DiscreteMeasure::empirical(ys).unwrap()).unwrap();
        println!("n={n} assign {:?} simplex {:?} diff {:e}", ta, t.elapsed(), a.cost() - p.coupling.cost());
    }
}
