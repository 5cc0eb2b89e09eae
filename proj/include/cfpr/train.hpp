#pragma once

#include <string>
#include <vector>

#include "cfpr/net.hpp"
#include "cfpr/patch.hpp"
#include "cfpr/resample.hpp"
#include "cfpr/rng.hpp"

namespace cfpr {

enum class Criterion { NoduleAccuracy, OverallAccuracy };

const char* criterion_name(Criterion c);

struct Hyper {
    int epochs = 20;
    int batch = 32;
    double lr = 0.01;
    double momentum = 0.9;
};

/// Borrowed reference to one labeled example.
struct SampleView {
    const Tensor* pixels;
    int label;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double criterion_value = 0.0;
    bool selected = false;
};

struct TrainResult {
    Model model;
    std::vector<EpochLog> log;
};

std::vector<SampleView> views_of(const TrainingSet& set);

/// Probability of class 1 for one example; always strictly inside (0,1).
double predict(const Model& model, const Tensor& pixels);

/// nodule-accuracy: share of label-1 samples with c(x) >= 0.5.
/// overall-accuracy: share of all samples classified correctly at 0.5.
double evaluate_accuracy(const Model& model, const std::vector<SampleView>& samples,
                         Criterion kind);

/// Minibatch SGD for hyper.epochs shuffled passes, evaluating the
/// criterion on validation after each epoch, returning the parameters
/// of the best epoch (ties go to the earliest). Deterministic given
/// (model, data, hyper, seed). Aborts with epoch/batch diagnostics when
/// the loss turns non-finite.
TrainResult train(const Model& initial, const TrainingSet& training,
                  const std::vector<SampleView>& validation, Criterion criterion,
                  const Hyper& hyper, std::uint64_t seed);

std::string format_training_log(const std::vector<EpochLog>& log);

}  // namespace cfpr
