//! Finite-difference checks of the autodiff primitives.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use socialprune::autodiff::{grad_check, Graph, Tensor, Var};
use socialprune::Result;

type Builder = fn(&mut Graph, &[Var]) -> Result<Var>;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = Tensor::uniform(&[4, 4], -2.0, 2.0, &mut rng);
    let b = Tensor::uniform(&[4, 4], -2.0, 2.0, &mut rng);
    let gamma = Tensor::uniform(&[1, 4], 0.5, 1.5, &mut rng);
    let beta = Tensor::uniform(&[1, 4], -0.5, 0.5, &mut rng);

    let cases: Vec<(&str, Builder, Vec<Tensor>, f64)> = vec![
        (
            "matmul -> softmax -> mse",
            |g, x| {
                let y = g.matmul(x[0], x[1])?;
                let p = g.row_softmax(y)?;
                let sq = g.mul(p, p)?;
                g.mean(sq)
            },
            vec![a.clone(), b.clone()],
            1e-4,
        ),
        (
            "sigmoid -> log",
            |g, x| {
                let s = g.sigmoid(x[0])?;
                let l = g.log(s)?;
                g.sum(l)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "layer norm",
            |g, x| {
                let y = g.layer_norm(x[0], x[1], x[2])?;
                let t = g.sigmoid(y)?;
                g.sum(t)
            },
            vec![a.clone(), gamma, beta],
            1e-3,
        ),
        (
            "variance loss",
            |g, x| {
                let v = g.variance(x[0])?;
                let v = g.add_scalar(v, 1e-6)?;
                let l = g.log(v)?;
                g.scale(l, -1.0)
            },
            vec![Tensor::uniform(&[1, 6], 0.05, 0.95, &mut rng)],
            1e-4,
        ),
    ];

    for (name, builder, leaves, tol) in cases {
        let report = grad_check(builder, &leaves, 1e-5, tol)?;
        println!(
            "{:<28} max relative error {:.2e}  (tolerance {:.0e})  {}",
            name,
            report.worst(),
            tol,
            if report.passed { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
