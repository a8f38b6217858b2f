fn main() {
    std::process::exit(grushin_pme::cli::dispatch(std::env::args_os()));
}
