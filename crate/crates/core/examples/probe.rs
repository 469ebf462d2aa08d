use pinnlab::network::Network;
use pinnlab::Activation;
use pinnlab::autodiff::{eval_field, eval_values, JetAdjoint};

fn check(net: &Network, points: &[f64], n: usize, label: &str) {
    let field = eval_field(net, None, points, n, false).unwrap();
    let mut adj = vec![0.0; field.out.len()];
    let c = net.output_dim();
    for p in 0..n {
        let mut ja = JetAdjoint::new(&field, &mut adj, p);
        for k in 0..c {
            ja.add_value(k, ((p * 7919 + k * 13) % 13) as f64 - 6.0);
        }
    }
    let mut grad = vec![0.0; net.param_count()];
    pinnlab::autodiff::batch::backprop_field(net, None, points, &field, &adj, &mut grad);
    let mut work = net.clone();
    let mut nbad = 0;
    for i in 0..net.param_count() {
        let orig = net.params()[i];
        work.params_mut()[i] = orig + 1e-7;
        let vu = eval_values(&work, None, points, n).unwrap();
        work.params_mut()[i] = orig - 1e-7;
        let vd = eval_values(&work, None, points, n).unwrap();
        work.params_mut()[i] = orig;
        let mut fd = 0.0;
        for p in 0..n {
            for k in 0..c {
                let cc = ((p * 7919 + k * 13) % 13) as f64 - 6.0;
                fd += cc * (vu[p * c + k] - vd[p * c + k]) / 2e-7;
            }
        }
        if grad[i].abs() > 1e-6 {
            let rel = ((grad[i] - fd) / grad[i]).abs();
            if rel > 1e-4 { nbad += 1; if nbad < 4 { println!("  {label} comp {i}: rev {} fd {fd}", grad[i]); } }
        }
    }
    println!("{label}: bad = {nbad}");
}

fn main() {
    // 5 points, depth-3
    let pts: Vec<f64> = (0..10).map(|k| (k as f64) * 0.13 - 0.6).collect();
    let relu = Network::init(&[2, 4, 4, 1], Activation::ReLU, 11).unwrap();
    check(&relu, &pts, 5, "relu [2,4,4,1] 5pts");
    let tanh = Network::init(&[2, 4, 4, 1], Activation::Tanh, 11).unwrap();
    check(&tanh, &pts, 5, "tanh [2,4,4,1] 5pts");
    let relu2 = Network::init(&[2, 4, 1], Activation::ReLU, 11).unwrap();
    check(&relu2, &pts, 5, "relu [2,4,1] 5pts");
    let one: Vec<f64> = vec![0.3, -0.2];
    check(&relu, &one, 1, "relu [2,4,4,1] 1pt");
}
