// Python bindings for the estimation, sensitivity, and lower-bound
// operations. Fit results and sensitivity reports are returned as plain
// dicts so callers stay numpy-native.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eiv/bench.hpp"
#include "eiv/error.hpp"
#include "eiv/estimators.hpp"
#include "eiv/minimax.hpp"
#include "eiv/model.hpp"
#include "eiv/sensitivities.hpp"

#include <optional>
#include <string>
#include <utility>

namespace py = pybind11;
using eiv::MatrixXd;
using eiv::VectorXd;

namespace
{

eiv::Compensation make_comp(const py::object &d_hat, Eigen::Index p)
{
    if (py::isinstance<py::float_>(d_hat) || py::isinstance<py::int_>(d_hat))
        return eiv::Compensation::isotropic(d_hat.cast<double>(), p);
    const VectorXd v = d_hat.cast<VectorXd>();
    eiv::require(v.size() == p, eiv::ErrorKind::shape,
                 "d_hat: expected a scalar or a length-p vector");
    eiv::Compensation c;
    c.d_hat = v;
    c.mode = eiv::CompensationMode::known;
    return c;
}

eiv::Dataset make_dataset(const VectorXd &y, const MatrixXd &Z)
{
    eiv::require(y.size() == Z.rows(), eiv::ErrorKind::shape,
                 "y and Z must have the same number of rows");
    eiv::Dataset d;
    d.y = y;
    d.Z = Z;
    return d;
}

py::dict fit_to_dict(const eiv::FitResult &fit)
{
    py::dict out;
    out["theta_hat"] = fit.theta_hat;
    out["t_hat"] = fit.t_hat;
    out["objective"] = fit.objective;
    out["residual_stat"] = fit.residual_stat;
    return out;
}

eiv::SensitivityNorm norm_from(const std::string &q)
{
    if (q == "1")
        return eiv::SensitivityNorm::l1;
    if (q == "2")
        return eiv::SensitivityNorm::l2;
    if (q == "inf")
        return eiv::SensitivityNorm::linf;
    if (q == "pr")
        return eiv::SensitivityNorm::pr;
    throw eiv::Error(eiv::ErrorKind::parse, "q must be one of '1', '2', 'inf', 'pr'");
}

py::dict sens_to_dict(const eiv::SensitivityReport &rep)
{
    py::dict out;
    out["value"] = rep.value;
    out["lower"] = rep.lower;
    out["upper"] = rep.upper;
    out["witness"] = rep.witness;
    out["witness_support"] = rep.witness_support;
    out["method"] =
        rep.method == eiv::SensitivityReport::Method::exact_lp ? "exact_lp" : "local_search";
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Sparse errors-in-variables regression: estimators, sensitivities, "
              "and minimax lower-bound instances";

    py::register_exception<eiv::Error>(m, "EivError");

    m.def(
        "generate_dgp",
        [](const VectorXd &theta_star, double sigma, double sigma_star, double rho,
           uint64_t seed, Eigen::Index n)
        {
            eiv::TrueModel model;
            model.theta_star = theta_star;
            model.sigma = sigma;
            model.sigma_star = sigma_star;
            model.rho = rho;
            model.seed = seed;
            const eiv::Dataset d = eiv::generate_dgp(model, n, theta_star.size());
            return py::make_tuple(d.y, d.Z, *d.X_opt);
        },
        py::arg("theta_star"), py::arg("sigma"), py::arg("sigma_star"), py::arg("rho"),
        py::arg("seed"), py::arg("n"),
        "Draw (y, Z, X) with AR(1) design covariance rho^|i-j|");

    m.def("practical_tuning", &eiv::practical_tuning, py::arg("epsilon"), py::arg("n"),
          py::arg("p"), py::arg("sigma"),
          "Returns (mu, tau) with mu = tau = sigma*sqrt(log(p/epsilon)/n)");

    m.def(
        "theoretical_tuning",
        [](Eigen::Index n, Eigen::Index p, double sigma, double sigma_star, double epsilon,
           double m2, const std::string &mode)
        {
            eiv::CompensationMode cm;
            if (mode == "known")
                cm = eiv::CompensationMode::known;
            else if (mode == "estimated")
                cm = eiv::CompensationMode::estimated;
            else
                throw eiv::Error(eiv::ErrorKind::parse, "mode must be 'known' or 'estimated'");
            const auto tc = eiv::TuningConstants::defaults(sigma, sigma_star, epsilon, m2);
            return eiv::theoretical_tuning(tc, n, p, sigma, sigma_star, cm);
        },
        py::arg("n"), py::arg("p"), py::arg("sigma"), py::arg("sigma_star"),
        py::arg("epsilon") = 0.05, py::arg("m2") = 1.0, py::arg("mode") = "known",
        "Tail-bound tuning pair (mu, tau) at confidence epsilon");

    m.def("gram", &eiv::gram, py::arg("X"), "Psi = (1/n) X^T X");

    m.def(
        "fit_conic",
        [](const VectorXd &y, const MatrixXd &Z, const py::object &d_hat, double lam, double mu,
           double tau)
        {
            eiv::EstimatorConfig cfg;
            cfg.lambda = lam;
            cfg.mu = mu;
            cfg.tau = tau;
            return fit_to_dict(
                eiv::fit_conic(make_dataset(y, Z), make_comp(d_hat, Z.cols()), cfg));
        },
        py::arg("y"), py::arg("Z"), py::arg("d_hat"), py::arg("lam") = 0.5, py::arg("mu") = 0.0,
        py::arg("tau") = 0.0,
        "Minimize |theta|_1 + lam*t s.t. |S(theta)|_inf <= mu*t + tau, |theta|_2 <= t");

    m.def(
        "fit_compensated_mu",
        [](const VectorXd &y, const MatrixXd &Z, const py::object &d_hat, double mu, double tau)
        {
            eiv::EstimatorConfig cfg;
            cfg.mu = mu;
            cfg.tau = tau;
            return fit_to_dict(
                eiv::fit_compensated_mu(make_dataset(y, Z), make_comp(d_hat, Z.cols()), cfg));
        },
        py::arg("y"), py::arg("Z"), py::arg("d_hat"), py::arg("mu") = 0.0, py::arg("tau") = 0.0,
        "Compensated matrix-uncertainty selector via its LP reformulation");

    m.def(
        "fit_mu_selector",
        [](const VectorXd &y, const MatrixXd &Z, double mu, double tau)
        {
            eiv::EstimatorConfig cfg;
            cfg.mu = mu;
            cfg.tau = tau;
            return fit_to_dict(eiv::fit_mu_selector(make_dataset(y, Z), cfg));
        },
        py::arg("y"), py::arg("Z"), py::arg("mu") = 0.0, py::arg("tau") = 0.0,
        "Plain matrix-uncertainty selector (no compensation)");

    m.def(
        "fit_dantzig",
        [](const VectorXd &y, const MatrixXd &M, double tau)
        { return fit_to_dict(eiv::fit_dantzig(y, M, tau)); },
        py::arg("y"), py::arg("M"), py::arg("tau"),
        "Dantzig selector on the given design matrix");

    m.def(
        "fixed_point_oracle",
        [](const VectorXd &y, const MatrixXd &Z, const py::object &d_hat, double mu, double tau)
        {
            eiv::EstimatorConfig cfg;
            cfg.mu = mu;
            cfg.tau = tau;
            return fit_to_dict(
                eiv::fixed_point_oracle(make_dataset(y, Z), make_comp(d_hat, Z.cols()), cfg));
        },
        py::arg("y"), py::arg("Z"), py::arg("d_hat"), py::arg("mu") = 0.0, py::arg("tau") = 0.0,
        "Bisection fixed point of phi(r); cross-check for fit_compensated_mu");

    m.def(
        "kappa_exact",
        [](const MatrixXd &psi, int s, double u, const std::string &q)
        { return sens_to_dict(eiv::kappa_exact(psi, s, u, norm_from(q))); },
        py::arg("psi"), py::arg("s"), py::arg("u"), py::arg("q") = "inf",
        "Exact sensitivity kappa_q(s, u), q in {'1', 'inf'}");

    m.def(
        "kappa_local",
        [](const MatrixXd &psi, int s, double u, const std::string &q, int restarts,
           uint64_t seed)
        { return sens_to_dict(eiv::kappa_local(psi, s, u, norm_from(q), restarts, seed)); },
        py::arg("psi"), py::arg("s"), py::arg("u"), py::arg("q") = "2", py::arg("restarts") = 20,
        py::arg("seed") = 0,
        "Bracketed sensitivity for q in {'2', 'pr'}");

    m.def("coherence", &eiv::coherence, py::arg("psi"),
          "Largest normalized absolute off-diagonal entry");

    py::class_<eiv::PackingSet>(m, "PackingSet")
        .def_readonly("codewords", &eiv::PackingSet::codewords)
        .def_readonly("min_pairwise_dist", &eiv::PackingSet::min_pairwise_dist)
        .def_readonly("p", &eiv::PackingSet::p)
        .def_readonly("s", &eiv::PackingSet::s)
        .def_readonly("meets_cardinality_bound", &eiv::PackingSet::meets_cardinality_bound)
        .def_readonly("log_cardinality", &eiv::PackingSet::log_cardinality)
        .def_readonly("cardinality_target", &eiv::PackingSet::cardinality_target);

    m.def("vg_packing", &eiv::vg_packing, py::arg("p"), py::arg("s"), py::arg("seed"),
          py::arg("c1") = 0.1,
          "Greedy packing of weight-(s-1) binary codes at Hamming distance > s/16");

    m.def(
        "hypothesis_family",
        [](const eiv::PackingSet &pack, double R, double gamma)
        {
            const eiv::HypothesisFamily fam = eiv::hypothesis_family(pack, R, gamma);
            MatrixXd rows(Eigen::Index(fam.omega_bars.size()), pack.p);
            for (size_t j = 0; j < fam.omega_bars.size(); ++j)
                rows.row(Eigen::Index(j)) = fam.omega_bars[j].transpose();
            return rows;
        },
        py::arg("packing"), py::arg("R"), py::arg("gamma"),
        "Hypothesis vectors on the radius-R sphere, one per row");

    m.def("gamma_select", &eiv::gamma_select, py::arg("n"), py::arg("p"), py::arg("s"),
          py::arg("R"), py::arg("c1") = 0.1, py::arg("c2") = 1.0,
          "Mixing weight balancing separation against the KL budget");

    m.def(
        "kl_exact",
        [](const MatrixXd &Sigma, double sigma, double sigma_star, const VectorXd &theta1,
           const VectorXd &theta2)
        { return eiv::kl_exact(eiv::KlModel(Sigma, sigma, sigma_star), theta1, theta2); },
        py::arg("Sigma"), py::arg("sigma"), py::arg("sigma_star"), py::arg("theta1"),
        py::arg("theta2"),
        "One-observation KL divergence between two regression hypotheses");

    m.def(
        "run_simulation",
        [](const std::string &config_json, const std::string &format)
        {
            const eiv::MetricsTable table =
                eiv::run_monte_carlo(eiv::parse_simulation_config(config_json));
            if (format == "csv")
                return eiv::emit_csv(table);
            if (format == "json")
                return eiv::emit_json(table);
            throw eiv::Error(eiv::ErrorKind::parse, "format must be 'csv' or 'json'");
        },
        py::arg("config_json"), py::arg("format") = "json",
        py::call_guard<py::gil_scoped_release>(),
        "Run the Monte Carlo study described by a JSON config string");
}
