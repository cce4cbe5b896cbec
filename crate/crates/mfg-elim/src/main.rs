// Dense kernels are allocated and dropped on every solver iteration; the
// system allocator keeps handing those pages back to the OS.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(mfg_elim::cli::run(&args));
}
