"""Entry point for running fp_spectra as a module: python -m fp_spectra."""

from fp_spectra.cli import main

if __name__ == "__main__":
    main()
