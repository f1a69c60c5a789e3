fn main() {
    std::process::exit(topiclab_cli::run(std::env::args_os()));
}
