fn main() {
    std::process::exit(roughpath::app::dispatch(std::env::args_os()));
}
