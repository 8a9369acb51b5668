use std::time::Instant;

use ktedge_core::models::{build_simplified_squeezenet, Adam};
use ktedge_core::{RngState, Tensor};

fn main() {
    for input in [[28, 28, 1], [40, 40, 3]] {
        let mut rng = RngState::new(1);
        let mut m = build_simplified_squeezenet(input, 2, &mut rng).unwrap();
        let x = Tensor::full(input.to_vec(), 0.5);
        let mut opt = Adam::default();
        let t = Instant::now();
        for i in 0..500 {
            m.train_step(&x, i % 2, &mut opt).unwrap();
        }
        let train = t.elapsed().as_secs_f64() / 500.0;
        let t = Instant::now();
        for _ in 0..500 {
            m.infer(&x).unwrap();
        }
        println!("{input:?}: train {:.3} ms, infer {:.3} ms", train * 1e3, t.elapsed().as_secs_f64() / 500.0 * 1e3);
    }
}
