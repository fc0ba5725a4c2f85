//! Compiles every chapter of the guide in `book/src` as doc-tests, since
//! mdbook cannot link code blocks against workspace crates.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(wavelet_bank, "wavelet-bank.md");
chapter!(transforms, "transforms.md");
chapter!(energies, "energies.md");
chapter!(denoising, "denoising.md");
chapter!(datagen, "datagen.md");
chapter!(experiments, "experiments.md");
