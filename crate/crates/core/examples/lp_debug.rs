use oneind_core::lp::minimize;
use oneind_core::relax::{build_renorm_lp, MixtureWeights, TwoProbability};

fn main() {
    let tp = TwoProbability::new(0.8457, 0.8457).unwrap();
    let lp = build_renorm_lp(tp, &MixtureWeights::intra(0.18).unwrap());
    match minimize(&lp) {
        Ok(out) => {
            let sol = out.optimal().expect("optimal");
            println!("optimum: {:.12}", sol.objective_value);
        }
        Err(e) => println!("error: {e}"),
    }
}
