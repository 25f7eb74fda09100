fn main() {
    std::process::exit(repu_tik::cli::run());
}
