fn main() {
    std::process::exit(defect_lattice::cli::main());
}
