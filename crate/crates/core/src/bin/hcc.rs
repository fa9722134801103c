fn main() {
    std::process::exit(hcc_tensor::cli::run());
}
