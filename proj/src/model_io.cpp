#include "perftx/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace perftx {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& X) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < X.cols(); ++j) row.push_back(X(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw ValidationError("model file: bad input matrix");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd X(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols)
            throw ValidationError("model file: ragged input matrix");
        for (Eigen::Index k = 0; k < cols; ++k)
            X(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    return X;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

nlohmann::json report_to_json(const FitReport& r) {
    return {{"iterations", r.iterations},
            {"restarts", r.restarts},
            {"initial_log_marginal", r.initial_log_marginal},
            {"final_log_marginal", r.final_log_marginal},
            {"train_seconds", r.train_seconds}};
}

} // namespace

std::string model_to_json(const GPModel& model) {
    nlohmann::json j;
    j["type"] = "gp";
    j["params"] = {{"lengthscales", vector_to_json(model.params().lengthscales)},
                   {"signal_variance", model.params().signal_variance},
                   {"noise_variance", model.params().noise_variance},
                   {"mean_constant", model.params().mean_constant}};
    j["standardization"] = {{"mean", model.target_mean()}, {"scale", model.target_scale()}};
    j["train_inputs"] = matrix_to_json(model.train_inputs());
    j["train_targets"] = vector_to_json(model.train_targets());
    j["fit_report"] = report_to_json(model.fit_report());
    return j.dump(2);
}

std::string model_to_json(const TransferGPModel& model) {
    nlohmann::json j;
    j["type"] = "transfer_gp";
    j["params"] = {{"lengthscales", vector_to_json(model.params().base.lengthscales)},
                   {"signal_variance", model.params().base.signal_variance},
                   {"mean_constant", model.params().base.mean_constant},
                   {"rho", model.params().rho},
                   {"noise_source", model.params().noise_source},
                   {"noise_target", model.params().noise_target}};
    j["standardization"] = {{"mean", model.target_mean()}, {"scale", model.target_scale()}};
    j["train_inputs"] = matrix_to_json(model.train_inputs());
    j["train_targets"] = vector_to_json(model.train_targets());
    nlohmann::json tags = nlohmann::json::array();
    for (TaskTag t : model.train_tags()) tags.push_back(t == TaskTag::Source ? "source" : "target");
    j["task"] = std::move(tags);
    j["fit_report"] = report_to_json(model.fit_report());
    return j.dump(2);
}

void save_model_file(const GPModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write model file '" + path + "'");
    out << model_to_json(model) << '\n';
}

void save_model_file(const TransferGPModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write model file '" + path + "'");
    out << model_to_json(model) << '\n';
}

Prediction LoadedModel::predict(const Eigen::VectorXd& x) const {
    return transfer_ ? transfer_->predict_target(x) : single_->predict(x);
}

Eigen::Index LoadedModel::dimension() const {
    return transfer_ ? transfer_->train_inputs().cols() : single_->train_inputs().cols();
}

LoadedModel load_model_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
    }
    const std::string type = j.value("type", "");
    const auto& jp = j.at("params");
    const auto& js = j.at("standardization");
    Eigen::MatrixXd X = matrix_from_json(j.at("train_inputs"));
    Eigen::VectorXd y = vector_from_json(j.at("train_targets"));

    if (type == "gp") {
        KernelParams p;
        p.lengthscales = vector_from_json(jp.at("lengthscales"));
        p.signal_variance = jp.at("signal_variance").get<double>();
        p.noise_variance = jp.at("noise_variance").get<double>();
        p.mean_constant = jp.at("mean_constant").get<double>();
        return LoadedModel(GPModel::from_params(p, std::move(X), std::move(y),
                                                js.at("mean").get<double>(),
                                                js.at("scale").get<double>()));
    }
    if (type == "transfer_gp") {
        TransferKernelParams p;
        p.base.lengthscales = vector_from_json(jp.at("lengthscales"));
        p.base.signal_variance = jp.at("signal_variance").get<double>();
        p.base.noise_variance = 0.0;
        p.base.mean_constant = jp.at("mean_constant").get<double>();
        p.rho = jp.at("rho").get<double>();
        p.noise_source = jp.at("noise_source").get<double>();
        p.noise_target = jp.at("noise_target").get<double>();
        std::vector<TaskTag> tags;
        for (const auto& t : j.at("task"))
            tags.push_back(t.get<std::string>() == "source" ? TaskTag::Source : TaskTag::Target);
        return LoadedModel(TransferGPModel::from_params(p, std::move(X), std::move(y),
                                                        std::move(tags),
                                                        js.at("mean").get<double>(),
                                                        js.at("scale").get<double>()));
    }
    throw ValidationError("model file: unknown type '" + type + "'");
}

LoadedModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_model_json(buf.str());
}

} // namespace perftx
