#include "eiv/bench.hpp"

#include "eiv/error.hpp"
#include "eiv/io.hpp"
#include "eiv/rng.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <thread>

namespace eiv
{

namespace
{

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

json parse_json_text(const std::string &text, const std::string &what)
{
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    require(!j.is_discarded(), ErrorKind::parse, what + ": malformed JSON");
    return j;
}

double json_number(const json &j, const std::string &key, const std::string &what)
{
    require(j.at(key).is_number(), ErrorKind::parse, what + ": field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

// One fitted variant: a (estimator, lambda) pair with its table label.
struct Slot
{
    EstimatorKind kind;
    std::optional<double> lambda;
    std::string method;
};

std::vector<Slot> build_slots(const SimulationConfig &cfg)
{
    std::vector<Slot> slots;
    for (EstimatorKind kind : cfg.estimators)
    {
        if (kind == EstimatorKind::conic)
        {
            for (double lam : cfg.lambdas)
                slots.push_back({kind, lam, estimator_name(kind)});
        }
        else
        {
            slots.push_back({kind, std::nullopt, estimator_name(kind)});
        }
    }
    require(!slots.empty(), ErrorKind::parse, "simulation: no estimators requested");
    return slots;
}

struct RepOutcome
{
    std::vector<ReplicationRecord> recs;
    MatrixXd X;
    std::exception_ptr err;
};

int worker_count(int replications)
{
    int w = 0;
    if (const char *env = std::getenv("EIV_WORKERS"))
    {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 1)
            w = static_cast<int>(v);
    }
    if (w == 0)
        w = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, std::min(w, replications));
}

Metrics metrics_from(const std::vector<const VectorXd *> &theta_hats,
                     const std::vector<const MatrixXd *> &Xs, const VectorXd &theta_star)
{
    require(!theta_hats.empty(), ErrorKind::shape, "compute_metrics: empty record set");
    require(theta_hats.size() == Xs.size(), ErrorKind::shape,
            "compute_metrics: one design per estimate required");
    const double count = static_cast<double>(theta_hats.size());
    VectorXd mean = VectorXd::Zero(theta_star.size());
    double sq = 0.0;
    double pred = 0.0;
    for (size_t r = 0; r < theta_hats.size(); ++r)
    {
        const VectorXd &th = *theta_hats[r];
        const MatrixXd &X = *Xs[r];
        require(th.size() == theta_star.size(), ErrorKind::shape,
                "compute_metrics: estimate length mismatch");
        require(X.cols() == theta_star.size() && X.rows() >= 1, ErrorKind::shape,
                "compute_metrics: design shape mismatch");
        const VectorXd delta = th - theta_star;
        mean += th;
        sq += delta.squaredNorm();
        pred += (X * delta).squaredNorm() / static_cast<double>(X.rows());
    }
    Metrics m;
    m.bias = (mean / count - theta_star).norm();
    m.rmse = std::sqrt(sq / count);
    m.pr = std::sqrt(pred / count);
    require(m.bias <= m.rmse + 1e-12, ErrorKind::solver,
            "compute_metrics: bias exceeded rmse, which is impossible for these definitions");
    return m;
}

json row_to_json(const MetricsRow &row)
{
    json r;
    r["method"] = row.method;
    if (row.lambda)
        r["lambda"] = *row.lambda;
    else
        r["lambda"] = nullptr;
    r["bias"] = row.bias;
    r["rmse"] = row.rmse;
    r["pr"] = row.pr;
    r["feasible"] = row.feasible;
    r["total"] = row.total;
    r["mean_seconds"] = row.mean_seconds;
    json recs = json::array();
    for (const auto &rec : row.records)
    {
        json jr;
        jr["replication"] = rec.replication;
        jr["feasible"] = rec.feasible;
        jr["seconds"] = rec.seconds;
        jr["theta_hat"] = std::vector<double>(rec.theta_hat.data(),
                                              rec.theta_hat.data() + rec.theta_hat.size());
        recs.push_back(std::move(jr));
    }
    r["records"] = std::move(recs);
    return r;
}

double json_double_or_nan(const json &j)
{
    return j.is_null() ? kNan : j.get<double>();
}

} // namespace

std::string estimator_name(EstimatorKind kind)
{
    switch (kind)
    {
    case EstimatorKind::conic:
        return "Conic";
    case EstimatorKind::comp_mu:
        return "CompMU";
    case EstimatorKind::mu:
        return "MU";
    case EstimatorKind::dantzig_x:
        return "DantzigX";
    case EstimatorKind::dantzig_z:
        return "DantzigZ";
    }
    throw Error(ErrorKind::parse, "estimator_name: unknown kind");
}

EstimatorKind estimator_from_name(const std::string &name)
{
    if (name == "conic")
        return EstimatorKind::conic;
    if (name == "comp_mu")
        return EstimatorKind::comp_mu;
    if (name == "mu")
        return EstimatorKind::mu;
    if (name == "dantzig_x")
        return EstimatorKind::dantzig_x;
    if (name == "dantzig_z")
        return EstimatorKind::dantzig_z;
    throw Error(ErrorKind::parse, "unknown estimator '" + name +
                                      "' (expected conic, comp_mu, mu, dantzig_x, dantzig_z)");
}

VectorXd theta_star_for(const SimulationConfig &cfg)
{
    if (cfg.theta_star_choice == "custom")
    {
        require(cfg.theta_custom.size() == cfg.p, ErrorKind::shape,
                "simulation: custom theta_star must have length p");
        return cfg.theta_custom;
    }
    require(cfg.theta_star_choice == "first" || cfg.theta_star_choice == "second",
            ErrorKind::parse, "simulation: theta_star choice must be first, second, or custom");
    require(cfg.p >= 5, ErrorKind::parse,
            "simulation: the named theta_star choices need p >= 5");
    VectorXd t = VectorXd::Zero(cfg.p);
    for (int k = 0; k < 5; ++k)
        t(k) = cfg.theta_star_choice == "first" ? 1.0 : 1.0 / double(k + 1);
    return t;
}

Metrics compute_metrics(const std::vector<VectorXd> &theta_hats, const std::vector<MatrixXd> &Xs,
                        const VectorXd &theta_star)
{
    std::vector<const VectorXd *> tp;
    std::vector<const MatrixXd *> xp;
    for (const auto &t : theta_hats)
        tp.push_back(&t);
    for (const auto &x : Xs)
        xp.push_back(&x);
    return metrics_from(tp, xp, theta_star);
}

MetricsTable run_monte_carlo(const SimulationConfig &cfg)
{
    require(cfg.replications >= 1, ErrorKind::parse, "simulation: replications must be >= 1");
    require(cfg.n >= 1 && cfg.p >= 1, ErrorKind::parse, "simulation: n and p must be positive");
    for (double lam : cfg.lambdas)
        require(lam > 0.0, ErrorKind::parse, "simulation: lambda values must be positive");

    const VectorXd theta_star = theta_star_for(cfg);
    const auto slots = build_slots(cfg);

    double mu = 0.0, tau = 0.0;
    if (cfg.tau_override && cfg.mu_override)
    {
        tau = *cfg.tau_override;
        mu = *cfg.mu_override;
    }
    else
    {
        std::tie(mu, tau) = practical_tuning(cfg.epsilon, cfg.n, cfg.p, cfg.sigma);
        tau = cfg.tau_override.value_or(tau);
        mu = cfg.mu_override.value_or(mu);
    }
    require(tau >= 0.0 && mu >= 0.0, ErrorKind::parse,
            "simulation: tau and mu must be nonnegative");

    const Compensation comp =
        Compensation::isotropic(cfg.sigma_star * cfg.sigma_star, cfg.p);

    const int R = cfg.replications;
    std::vector<RepOutcome> outcomes(static_cast<size_t>(R));

    auto run_one = [&](int r) {
        RepOutcome out;
        TrueModel model;
        model.theta_star = theta_star;
        model.sigma = cfg.sigma;
        model.sigma_star = cfg.sigma_star;
        model.rho = cfg.rho;
        model.seed = mix_seed(cfg.base_seed, static_cast<uint64_t>(r));
        const Dataset data = generate_dgp(model, cfg.n, cfg.p);
        out.X = *data.X_opt;
        for (const auto &slot : slots)
        {
            ReplicationRecord rec;
            rec.replication = r;
            const auto t0 = std::chrono::steady_clock::now();
            try
            {
                FitResult fit;
                EstimatorConfig ecfg;
                ecfg.lambda = slot.lambda.value_or(0.5);
                ecfg.mu = mu;
                ecfg.tau = tau;
                switch (slot.kind)
                {
                case EstimatorKind::conic:
                    fit = fit_conic(data, comp, ecfg);
                    break;
                case EstimatorKind::comp_mu:
                    fit = fit_compensated_mu(data, comp, ecfg);
                    break;
                case EstimatorKind::mu:
                    fit = fit_mu_selector(data, ecfg);
                    break;
                case EstimatorKind::dantzig_x:
                    fit = fit_dantzig(data.y, *data.X_opt, tau);
                    break;
                case EstimatorKind::dantzig_z:
                    fit = fit_dantzig(data.y, data.Z, tau);
                    break;
                }
                rec.feasible = true;
                rec.theta_hat = fit.theta_hat;
            }
            catch (const Error &e)
            {
                if (e.kind != ErrorKind::infeasible)
                    throw;
                rec.feasible = false;
            }
            rec.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            out.recs.push_back(std::move(rec));
        }
        return out;
    };

    const int workers = worker_count(R);
    if (workers == 1)
    {
        for (int r = 0; r < R; ++r)
            outcomes[static_cast<size_t>(r)] = run_one(r);
    }
    else
    {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int r; (r = next.fetch_add(1)) < R;)
                {
                    try
                    {
                        outcomes[static_cast<size_t>(r)] = run_one(r);
                    }
                    catch (...)
                    {
                        outcomes[static_cast<size_t>(r)].err = std::current_exception();
                    }
                }
            });
        for (auto &t : pool)
            t.join();
        for (const auto &o : outcomes)
            if (o.err)
                std::rethrow_exception(o.err);
    }

    MetricsTable table;
    table.n = cfg.n;
    table.p = cfg.p;
    table.theta_star = theta_star;
    table.tau = tau;
    table.mu = mu;
    table.base_seed = cfg.base_seed;

    for (size_t s = 0; s < slots.size(); ++s)
    {
        MetricsRow row;
        row.method = slots[s].method;
        row.lambda = slots[s].lambda;
        row.total = R;
        // Reserve up front: metric aggregation keeps pointers into records.
        row.records.reserve(static_cast<size_t>(R));
        std::vector<const VectorXd *> thetas;
        std::vector<const MatrixXd *> designs;
        double seconds = 0.0;
        for (int r = 0; r < R; ++r)
        {
            const auto &rec = outcomes[static_cast<size_t>(r)].recs[s];
            row.records.push_back(rec);
            seconds += rec.seconds;
            if (rec.feasible)
            {
                thetas.push_back(&row.records.back().theta_hat);
                designs.push_back(&outcomes[static_cast<size_t>(r)].X);
            }
        }
        row.feasible = static_cast<int>(thetas.size());
        row.mean_seconds = seconds / double(R);
        if (row.feasible > 0)
        {
            const Metrics m = metrics_from(thetas, designs, theta_star);
            row.bias = m.bias;
            row.rmse = m.rmse;
            row.pr = m.pr;
        }
        else
        {
            row.bias = row.rmse = row.pr = kNan;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

RateScanResult rate_scan(const SimulationConfig &cfg, const std::vector<Eigen::Index> &n_list)
{
    require(!n_list.empty(), ErrorKind::parse, "rate_scan: n_list must be nonempty");
    for (size_t i = 1; i < n_list.size(); ++i)
        require(n_list[i] > n_list[i - 1], ErrorKind::parse,
                "rate_scan: n_list must be strictly increasing");
    bool has_conic = false;
    for (EstimatorKind k : cfg.estimators)
        has_conic = has_conic || k == EstimatorKind::conic;
    require(has_conic && !cfg.lambdas.empty(), ErrorKind::parse,
            "rate_scan: the conic estimator must be configured");

    RateScanResult out;
    for (Eigen::Index n : n_list)
    {
        SimulationConfig c = cfg;
        c.n = n;
        const MetricsTable table = run_monte_carlo(c);
        for (const auto &row : table.rows)
            if (row.method == "Conic" && row.lambda && *row.lambda == cfg.lambdas.front())
            {
                out.points.push_back({n, row.rmse});
                break;
            }
    }
    if (out.points.size() >= 2)
    {
        bool positive = true;
        for (const auto &pt : out.points)
            positive = positive && pt.rmse > 0.0 && std::isfinite(pt.rmse);
        if (positive)
        {
            double mx = 0.0, my = 0.0;
            for (const auto &pt : out.points)
            {
                mx += std::log(double(pt.n));
                my += std::log(pt.rmse);
            }
            mx /= double(out.points.size());
            my /= double(out.points.size());
            double num = 0.0, den = 0.0;
            for (const auto &pt : out.points)
            {
                const double dx = std::log(double(pt.n)) - mx;
                num += dx * (std::log(pt.rmse) - my);
                den += dx * dx;
            }
            out.slope = num / den;
        }
    }
    return out;
}

std::string emit_csv(const MetricsTable &table)
{
    std::string out = "Method,Lambda,Bias,RMSE,PR,Feasible,MeanSeconds\n";
    for (const auto &row : table.rows)
    {
        out += row.method;
        out += ',';
        if (row.lambda)
            out += format_double(*row.lambda);
        out += ',' + format_double(row.bias);
        out += ',' + format_double(row.rmse);
        out += ',' + format_double(row.pr);
        out += ',' + std::to_string(row.feasible);
        out += ',' + format_double(row.mean_seconds);
        out += '\n';
    }
    return out;
}

std::string emit_json(const MetricsTable &table)
{
    json j;
    j["n"] = table.n;
    j["p"] = table.p;
    j["tau"] = table.tau;
    j["mu"] = table.mu;
    j["base_seed"] = table.base_seed;
    j["theta_star"] = std::vector<double>(table.theta_star.data(),
                                          table.theta_star.data() + table.theta_star.size());
    json rows = json::array();
    for (const auto &row : table.rows)
        rows.push_back(row_to_json(row));
    j["rows"] = std::move(rows);
    return j.dump(2);
}

MetricsTable parse_metrics_json(const std::string &text)
{
    const json j = parse_json_text(text, "metrics table");
    MetricsTable table;
    try
    {
        table.n = j.at("n").get<Eigen::Index>();
        table.p = j.at("p").get<Eigen::Index>();
        table.tau = j.at("tau").get<double>();
        table.mu = j.at("mu").get<double>();
        table.base_seed = j.at("base_seed").get<uint64_t>();
        const auto ts = j.at("theta_star").get<std::vector<double>>();
        table.theta_star = Eigen::Map<const VectorXd>(ts.data(), Eigen::Index(ts.size()));
        for (const auto &jr : j.at("rows"))
        {
            MetricsRow row;
            row.method = jr.at("method").get<std::string>();
            if (!jr.at("lambda").is_null())
                row.lambda = jr.at("lambda").get<double>();
            row.bias = json_double_or_nan(jr.at("bias"));
            row.rmse = json_double_or_nan(jr.at("rmse"));
            row.pr = json_double_or_nan(jr.at("pr"));
            row.feasible = jr.at("feasible").get<int>();
            row.total = jr.at("total").get<int>();
            row.mean_seconds = json_double_or_nan(jr.at("mean_seconds"));
            for (const auto &rec_j : jr.at("records"))
            {
                ReplicationRecord rec;
                rec.replication = rec_j.at("replication").get<int>();
                rec.feasible = rec_j.at("feasible").get<bool>();
                rec.seconds = rec_j.at("seconds").get<double>();
                const auto th = rec_j.at("theta_hat").get<std::vector<double>>();
                rec.theta_hat = Eigen::Map<const VectorXd>(th.data(), Eigen::Index(th.size()));
                row.records.push_back(std::move(rec));
            }
            table.rows.push_back(std::move(row));
        }
    }
    catch (const json::exception &e)
    {
        throw Error(ErrorKind::parse, std::string("metrics table: ") + e.what());
    }
    return table;
}

SimulationConfig parse_simulation_config(const std::string &json_text)
{
    const json j = parse_json_text(json_text, "simulation config");
    require(j.is_object(), ErrorKind::parse, "simulation config: top level must be an object");

    static const std::vector<std::string> allowed = {
        "n",   "p",        "replications", "theta_star", "sigma", "sigma_star",
        "rho", "epsilon",  "lambdas",      "estimators", "seed",  "tau",
        "mu",
    };
    for (const auto &item : j.items())
    {
        bool ok = false;
        for (const auto &k : allowed)
            ok = ok || item.key() == k;
        require(ok, ErrorKind::parse, "simulation config: unknown field '" + item.key() + "'");
    }

    SimulationConfig cfg;
    try
    {
        if (j.contains("n"))
            cfg.n = j.at("n").get<Eigen::Index>();
        if (j.contains("p"))
            cfg.p = j.at("p").get<Eigen::Index>();
        if (j.contains("replications"))
            cfg.replications = j.at("replications").get<int>();
        if (j.contains("sigma"))
            cfg.sigma = json_number(j, "sigma", "simulation config");
        if (j.contains("sigma_star"))
            cfg.sigma_star = json_number(j, "sigma_star", "simulation config");
        if (j.contains("rho"))
            cfg.rho = json_number(j, "rho", "simulation config");
        if (j.contains("epsilon"))
            cfg.epsilon = json_number(j, "epsilon", "simulation config");
        if (j.contains("seed"))
            cfg.base_seed = j.at("seed").get<uint64_t>();
        if (j.contains("tau"))
            cfg.tau_override = json_number(j, "tau", "simulation config");
        if (j.contains("mu"))
            cfg.mu_override = json_number(j, "mu", "simulation config");
        if (j.contains("lambdas"))
            cfg.lambdas = j.at("lambdas").get<std::vector<double>>();
        if (j.contains("theta_star"))
        {
            const auto &t = j.at("theta_star");
            if (t.is_string())
            {
                cfg.theta_star_choice = t.get<std::string>();
            }
            else if (t.is_array())
            {
                cfg.theta_star_choice = "custom";
                const auto v = t.get<std::vector<double>>();
                cfg.theta_custom = Eigen::Map<const VectorXd>(v.data(), Eigen::Index(v.size()));
            }
            else
            {
                throw Error(ErrorKind::parse,
                            "simulation config: theta_star must be a name or an array");
            }
        }
        if (j.contains("estimators"))
        {
            cfg.estimators.clear();
            for (const auto &name : j.at("estimators"))
                cfg.estimators.push_back(estimator_from_name(name.get<std::string>()));
        }
    }
    catch (const json::exception &e)
    {
        throw Error(ErrorKind::parse, std::string("simulation config: ") + e.what());
    }
    return cfg;
}

std::string fit_from_file(const std::string &y_path, const std::string &z_path,
                          const std::string &config_path)
{
    const VectorXd y = read_csv_vector(y_path);
    const MatrixXd Z = read_csv_matrix(z_path);
    require(y.size() == Z.rows(), ErrorKind::shape,
            "fit: y has " + std::to_string(y.size()) + " rows but Z has " +
                std::to_string(Z.rows()));

    const json j = parse_json_text(read_text_file(config_path), "fit config");
    require(j.is_object(), ErrorKind::parse, "fit config: top level must be an object");
    require(j.contains("estimator"), ErrorKind::parse,
            "fit config: missing required field 'estimator'");
    require(j.contains("tau"), ErrorKind::parse, "fit config: missing required field 'tau'");

    std::string est;
    EstimatorConfig ecfg;
    Dataset data;
    data.y = y;
    data.Z = Z;
    data.n = Z.rows();
    data.p = Z.cols();
    try
    {
        est = j.at("estimator").get<std::string>();
        ecfg.tau = json_number(j, "tau", "fit config");
        if (j.contains("lambda"))
            ecfg.lambda = json_number(j, "lambda", "fit config");
        if (j.contains("mu"))
            ecfg.mu = json_number(j, "mu", "fit config");
    }
    catch (const json::exception &e)
    {
        throw Error(ErrorKind::parse, std::string("fit config: ") + e.what());
    }

    const bool needs_mu = est == "conic" || est == "comp_mu" || est == "mu";
    require(!needs_mu || j.contains("mu"), ErrorKind::parse,
            "fit config: missing required field 'mu'");

    Compensation comp = Compensation::none(data.p);
    if (est == "conic" || est == "comp_mu")
    {
        require(j.contains("d_hat"), ErrorKind::parse,
                "fit config: missing required field 'd_hat'");
        const auto &d = j.at("d_hat");
        try
        {
            if (d.is_number())
            {
                comp = Compensation::isotropic(d.get<double>(), data.p);
            }
            else
            {
                const auto v = d.get<std::vector<double>>();
                require(Eigen::Index(v.size()) == data.p, ErrorKind::shape,
                        "fit config: d_hat length must equal the number of columns of Z");
                comp.d_hat = Eigen::Map<const VectorXd>(v.data(), Eigen::Index(v.size()));
                comp.mode = CompensationMode::known;
            }
        }
        catch (const json::exception &e)
        {
            throw Error(ErrorKind::parse, std::string("fit config: d_hat: ") + e.what());
        }
    }

    FitResult fit;
    if (est == "conic")
        fit = fit_conic(data, comp, ecfg);
    else if (est == "comp_mu")
        fit = fit_compensated_mu(data, comp, ecfg);
    else if (est == "mu")
        fit = fit_mu_selector(data, ecfg);
    else if (est == "dantzig")
        fit = fit_dantzig(data.y, data.Z, ecfg.tau);
    else
        throw Error(ErrorKind::parse, "fit config: unknown estimator '" + est +
                                          "' (expected conic, comp_mu, mu, dantzig)");

    json out;
    out["estimator"] = est;
    out["n"] = data.n;
    out["p"] = data.p;
    out["tau"] = ecfg.tau;
    if (needs_mu)
        out["mu"] = ecfg.mu;
    if (est == "conic")
        out["lambda"] = ecfg.lambda;
    out["theta_hat"] =
        std::vector<double>(fit.theta_hat.data(), fit.theta_hat.data() + fit.theta_hat.size());
    out["t_hat"] = fit.t_hat;
    out["objective"] = fit.objective;
    out["residual_stat"] = fit.residual_stat;
    out["status"] = "optimal";
    return out.dump(2);
}

} // namespace eiv
