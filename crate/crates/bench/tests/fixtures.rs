use adfd_bench::{random_matrix, random_psd};

#[test]
fn fixtures_are_seeded_and_shaped() {
    let a = random_matrix(7, 5, 3);
    assert_eq!(a.shape(), (7, 5));
    assert_eq!(a.as_slice(), random_matrix(7, 5, 3).as_slice());
    assert_ne!(a.as_slice(), random_matrix(7, 5, 4).as_slice());
    assert!(a.as_slice().iter().all(|v| v.abs() <= 1.0));
    let s = random_psd(6, 1);
    assert_eq!(s.max_asymmetry(), Some(0.0));
}
