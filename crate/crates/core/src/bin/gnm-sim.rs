fn main() {
    std::process::exit(gnm_sim::cli::run());
}
