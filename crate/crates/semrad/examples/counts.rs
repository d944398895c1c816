fn main() {
    for beta in 2..=14usize {
        let m = semrad::mesh::generate_cylinder_domain(1.0, 2.5, 4.0, beta, 1.0, true).unwrap();
        println!("R=1 h=2.5 L=4  beta={beta}: N_elm={}", m.n_elements());
    }
    for beta in [3usize, 5, 8] {
        let m = semrad::mesh::generate_cylinder_domain(1.0, 6.283, 10.0, beta, 1.15, true).unwrap();
        println!("R=1 h=6.283 L=10 grading 1.15 beta={beta}: N_elm={}", m.n_elements());
    }
    let m = semrad::mesh::generate_cylinder_domain(0.5, 3.0, 5.0, 5, 1.2, true).unwrap();
    println!("R=0.5 h=3 L=5 beta=5: N_elm={}", m.n_elements());
}
