#pragma once

#include <optional>
#include <string>

#include "perftx/gp.hpp"
#include "perftx/transfer_gp.hpp"

namespace perftx {

/// JSON model files hold hyperparameters, standardization constants and the
/// training data; factorizations are recomputed on load, so a loaded model
/// reproduces the original predictions exactly. The stored fit report is
/// informational and not restored into the model object.

std::string model_to_json(const GPModel& model);
std::string model_to_json(const TransferGPModel& model);

void save_model_file(const GPModel& model, const std::string& path);
void save_model_file(const TransferGPModel& model, const std::string& path);

/// Either kind of model, dispatching predictions to whichever was loaded.
class LoadedModel {
public:
    explicit LoadedModel(GPModel m) : single_(std::move(m)) {}
    explicit LoadedModel(TransferGPModel m) : transfer_(std::move(m)) {}

    bool is_transfer() const { return transfer_.has_value(); }
    Prediction predict(const Eigen::VectorXd& x) const;
    Eigen::Index dimension() const;
    const GPModel* single() const { return single_ ? &*single_ : nullptr; }
    const TransferGPModel* transfer() const { return transfer_ ? &*transfer_ : nullptr; }

private:
    std::optional<GPModel> single_;
    std::optional<TransferGPModel> transfer_;
};

LoadedModel load_model_json(const std::string& json_text);
LoadedModel load_model_file(const std::string& path);

} // namespace perftx
