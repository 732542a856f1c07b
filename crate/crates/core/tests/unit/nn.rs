use loro_core::nn::*;
use ndarray::array;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn zero_weights_output_bias() {
    let mut net = Mlp::zeros(&[3, 5, 2]).unwrap();
    net.layers_mut()[1].bias = array![0.25, -1.5];
    assert_eq!(net.forward(&[9.0, -3.0, 1.0]).unwrap(), vec![0.25, -1.5]);
}

#[test]
fn single_linear_layer() {
    let net = Mlp::from_layers(vec![Dense {
        weights: array![[1.0, 2.0], [-1.0, 0.5], [0.0, 3.0]],
        bias: array![0.1, 0.2, 0.3],
    }])
    .unwrap();
    let y = net.forward(&[2.0, 4.0]).unwrap();
    assert_eq!(y, vec![10.1, 0.2, 12.3]);
}

#[test]
fn linear_squared_error_gradient() {
    // d/dW ||Wx + b - y||^2 = 2 (Wx + b - y) x^T
    let net = Mlp::from_layers(vec![Dense {
        weights: array![[0.5, -1.0], [2.0, 0.25]],
        bias: array![0.1, -0.2],
    }])
    .unwrap();
    let x = array![[1.5, -2.0]];
    let target = array![[0.0, 1.0]];
    let cache = net.forward_batch(x.view()).unwrap();
    let resid = cache.output() - &target;
    let g = net.backward(&cache, (2.0 * &resid).view()).unwrap();
    let expected = 2.0 * resid.t().dot(&x);
    for (a, b) in g.layers[0].weights.iter().zip(expected.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in g.layers[0].bias.iter().zip((2.0 * &resid).row(0).iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn zero_seed_gives_zero_gradients() {
    let net = Mlp::new(&[4, 8, 3], &mut rng(1)).unwrap();
    let cache = net
        .forward_batch(array![[0.1, 0.2, 0.3, 0.4]].view())
        .unwrap();
    let g = net.backward(&cache, Array2::zeros((1, 3)).view()).unwrap();
    assert!(g.layers.iter().all(|l| l.weights.iter().all(|&v| v == 0.0)));
    assert!(g.layers.iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
}

#[test]
fn shape_errors() {
    let net = Mlp::new(&[4, 8, 3], &mut rng(1)).unwrap();
    assert!(matches!(net.forward(&[1.0, 2.0]), Err(NnError::Shape(_))));
    let other = Mlp::new(&[2, 3], &mut rng(2)).unwrap();
    let cache = other.forward_batch(array![[1.0, 2.0]].view()).unwrap();
    assert!(matches!(
        net.backward(&cache, Array2::zeros((1, 3)).view()),
        Err(NnError::CacheMismatch)
    ));
    assert!(Mlp::zeros(&[3]).is_err());
    assert!(Mlp::zeros(&[3, 0, 2]).is_err());
}

#[test]
fn seeded_init_is_deterministic_and_bounded() {
    let a = Mlp::new(&[4, 64, 64, 2], &mut rng(9)).unwrap();
    let b = Mlp::new(&[4, 64, 64, 2], &mut rng(9)).unwrap();
    assert_eq!(a, b);
    let bound = 1.0 / 4f64.sqrt();
    assert!(a.layers()[0].weights.iter().all(|w| w.abs() <= bound));
    assert_eq!(a.param_count(), 4 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
}

#[test]
fn copy_params_semantics() {
    let mut r = rng(3);
    let mut src = Mlp::new(&[3, 6, 2], &mut r).unwrap();
    let mut dst = Mlp::new(&[3, 6, 2], &mut r).unwrap();
    copy_params(&src, &mut dst).unwrap();
    for _ in 0..5 {
        let x: Vec<f64> = (0..3).map(|_| r.random_range(-2.0..2.0)).collect();
        assert_eq!(src.forward(&x).unwrap(), dst.forward(&x).unwrap());
    }
    let before = dst.clone();
    src.layers_mut()[0].weights[[0, 0]] += 1.0;
    assert_eq!(dst, before);

    let snapshot = src.clone();
    let copy = src.clone();
    copy_params(&copy, &mut src).unwrap();
    assert_eq!(src, snapshot);

    let mut wrong = Mlp::new(&[3, 5, 2], &mut r).unwrap();
    assert!(copy_params(&src, &mut wrong).is_err());
}

#[test]
fn soft_update_with_unit_tau_copies() {
    let mut r = rng(4);
    let src = Mlp::new(&[2, 4, 1], &mut r).unwrap();
    let mut dst = Mlp::new(&[2, 4, 1], &mut r).unwrap();
    dst.soft_update_from(&src, 1.0).unwrap();
    assert_eq!(dst, src);
}
