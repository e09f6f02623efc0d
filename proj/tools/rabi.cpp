#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "rabi/cli.hpp"

namespace {

void add_model_options(CLI::App *sub, rabi::RunConfig &c)
{
    sub->add_option("--g", c.g, "coupling g > 0")->envname("RABI_G");
    sub->add_option("--delta", c.delta, "qubit splitting delta")->envname("RABI_DELTA");
    sub->add_option("--epsilon", c.epsilon, "symmetry-breaking bias epsilon")->envname("RABI_EPSILON");
    sub->add_option("--format", c.format, "output format: csv or json")->envname("RABI_FORMAT");
    sub->add_option("--out", c.out, "output file (default stdout)")->envname("RABI_OUT");
}

void add_range_options(CLI::App *sub, rabi::RunConfig &c)
{
    sub->add_option("--x-min", c.x_min, "lower end of the x = E + g^2 range")->envname("RABI_X_MIN");
    sub->add_option("--x-max", c.x_max, "upper end of the x range")->envname("RABI_X_MAX");
}

void add_scan_options(CLI::App *sub, rabi::RunConfig &c)
{
    sub->add_option("--parity", c.parity, "parity sector: +, - or both")->envname("RABI_PARITY");
    sub->add_option("--z0", c.z0, "evaluation point of the generalized G-function, e.g. 5i or 0.3+0.2i")
        ->envname("RABI_Z0");
    sub->add_option("--trunc", c.trunc, "fixed truncation order of the series (0 = automatic)")
        ->envname("RABI_TRUNC");
    sub->add_option("--precision", c.precision, "arithmetic: auto, double or extended")->envname("RABI_PRECISION");
    sub->add_option("--workers", c.workers, "concurrent interval scans")->envname("RABI_WORKERS");
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Spectrum of the quantum Rabi model from the zeros of its G-functions"};
    app.require_subcommand(1);
    rabi::RunConfig c;

    auto *spectrum = app.add_subcommand("spectrum", "levels as zeros of G (both parities by default)");
    add_model_options(spectrum, c);
    add_range_options(spectrum, c);
    add_scan_options(spectrum, c);
    spectrum->add_option("--tol", c.tol, "bisection tolerance on x (default 1e-12)")->envname("RABI_TOL");

    auto *gtrace = app.add_subcommand("gtrace", "samples G(x; z0) on a uniform x grid");
    add_model_options(gtrace, c);
    add_range_options(gtrace, c);
    add_scan_options(gtrace, c);
    gtrace->add_option("--samples", c.samples, "number of samples")->envname("RABI_SAMPLES");

    auto *validate = app.add_subcommand("validate", "matching conditions and theorem check at given x");
    add_model_options(validate, c);
    validate->add_option("--parity", c.parity, "parity sector: +, - or both")->envname("RABI_PARITY");
    validate->add_option("--z0", c.z0, "matching point inside D0 (default 0)")->envname("RABI_Z0");
    validate->add_option("--x", c.xs, "spectral parameter(s) to check")->required();
    validate->add_option("--tol", c.tol, "residual tolerance (default 1e-7)")->envname("RABI_TOL");

    auto *compare = app.add_subcommand("compare", "scan versus truncated-Fock-space oracle");
    add_model_options(compare, c);
    add_range_options(compare, c);
    add_scan_options(compare, c);
    compare->add_option("--tol", c.tol, "agreement tolerance on x (default 1e-8)")->envname("RABI_TOL");
    compare->add_option("--nfock", c.nfock, "Fock truncation of the oracle (0 = automatic)")->envname("RABI_NFOCK");

    auto *oracle = app.add_subcommand("oracle", "certified eigenvalues by dense diagonalization");
    add_model_options(oracle, c);
    add_range_options(oracle, c);
    oracle->add_option("--nfock", c.nfock, "Fock truncation (0 = automatic)")->envname("RABI_NFOCK");

    auto *convert = app.add_subcommand("convert", "re-emit a JSON level table as csv or json");
    convert->add_option("--in", c.input, "JSON level table")->required();
    convert->add_option("--format", c.format, "output format: csv or json")->envname("RABI_FORMAT");
    convert->add_option("--out", c.out, "output file (default stdout)")->envname("RABI_OUT");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return rabi::exit_config;
    }
    c.subcommand = app.get_subcommands().front()->get_name();
    return rabi::run_command(c, std::cout, std::cerr);
}
