fn main() {
    std::process::exit(geomoea::cli::run(std::env::args_os()));
}
