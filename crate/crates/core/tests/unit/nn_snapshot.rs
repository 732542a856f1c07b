use loro_core::nn::Mlp;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn round_trip_in_memory() {
    let net = Mlp::new(&[3, 7, 2], &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let mut buf = Vec::new();
    net.write_to(&mut buf).unwrap();
    assert_eq!(buf.len(), 8 * (1 + 3 + net.param_count()));
    assert_eq!(&buf[..8], &3u64.to_le_bytes());
    assert_eq!(Mlp::read_from(buf.as_slice()).unwrap(), net);
}

#[test]
fn rejects_truncated_and_trailing() {
    let net = Mlp::new(&[2, 2], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let mut buf = Vec::new();
    net.write_to(&mut buf).unwrap();
    assert!(Mlp::read_from(&buf[..buf.len() - 1]).is_err());
    buf.push(0);
    assert!(Mlp::read_from(buf.as_slice()).is_err());
    assert!(Mlp::read_from(&[0u8; 4][..]).is_err());
}
