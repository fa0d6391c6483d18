use dace::linalg::*;
fn main() {
    let a = SymmetricMatrix::diagonal(&[2.0, 2.0, 1.0]);
    for k in 1..=3 {
        match top_k_eigen_with_iters(&a, k, 1e-8, 100000) {
            Ok(dec) => println!("k={k}: vals={:?} degen={}", dec.eigenvalues, dec.degenerate_gap),
            Err(e) => println!("k={k}: ERR {e}"),
        }
    }
}
