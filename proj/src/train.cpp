#include "cfpr/train.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "cfpr/error.hpp"
#include "cfpr/ops.hpp"

namespace cfpr {

const char* criterion_name(Criterion c) {
    return c == Criterion::NoduleAccuracy ? "nodule-accuracy" : "overall-accuracy";
}

std::vector<SampleView> views_of(const TrainingSet& set) {
    std::vector<SampleView> out;
    out.reserve(set.items.size());
    for (const auto& item : set.items) out.push_back({&item.patch.pixels, item.label});
    return out;
}

double predict(const Model& model, const Tensor& pixels) {
    auto logits = forward(model, pixels, nullptr);
    return softmax_xent(logits, 0).prob[1];
}

double evaluate_accuracy(const Model& model, const std::vector<SampleView>& samples,
                         Criterion kind) {
    if (samples.empty()) throw Error("evaluate_accuracy: empty sample list");
    std::size_t total = 0, correct = 0;
    for (const auto& s : samples) {
        if (kind == Criterion::NoduleAccuracy && s.label != 1) continue;
        double c = predict(model, *s.pixels);
        int pred = c >= 0.5 ? 1 : 0;
        ++total;
        if (pred == s.label) ++correct;
    }
    if (total == 0)
        throw Error("evaluate_accuracy: no label-1 samples for nodule-accuracy");
    return static_cast<double>(correct) / static_cast<double>(total);
}

TrainResult train(const Model& initial, const TrainingSet& training,
                  const std::vector<SampleView>& validation, Criterion criterion,
                  const Hyper& hyper, std::uint64_t seed) {
    if (training.items.empty()) throw Error("train: training set is empty");
    if (validation.empty()) throw Error("train: validation set is empty");
    if (hyper.epochs < 0) throw Error("train: epochs must be >= 0");
    if (hyper.batch < 1) throw Error("train: batch must be >= 1");

    TrainResult result;
    result.model = initial;
    result.model.meta.seed = seed;
    if (hyper.epochs == 0) return result;

    Model current = initial;
    std::vector<LayerGrads> grads = zero_grads(current);
    std::vector<LayerGrads> batch_acc = zero_grads(current);
    std::vector<LayerGrads> velocity = zero_grads(current);

    RngStream rng = RngStream(seed).child("train");
    std::vector<std::size_t> order(training.items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    Model best = current;
    double best_value = -1.0;
    int best_epoch = -1;

    Tape tape;
    for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        std::size_t n = order.size();
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hyper.batch)) {
            std::size_t end = std::min(n, start + static_cast<std::size_t>(hyper.batch));
            double inv = 1.0 / static_cast<double>(end - start);
            for (auto& g : batch_acc) {
                for (auto& w : g.weights.v) w = 0.0;
                for (auto& b : g.bias) b = 0.0;
            }
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const TrainItem& item = training.items[order[i]];
                auto logits = forward(current, item.patch.pixels, &tape);
                auto sm = softmax_xent(logits, item.label);
                batch_loss += sm.loss;
                auto g = backward(current, tape, sm.grad);
                accumulate(batch_acc, g, inv);
            }
            if (!std::isfinite(batch_loss))
                throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                            " batch " + std::to_string(batch_index));
            loss_sum += batch_loss;
            sgd_step(current, batch_acc, hyper.lr, hyper.momentum, velocity);
            ++batch_index;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.mean_loss = loss_sum / static_cast<double>(n);
        entry.criterion_value = evaluate_accuracy(current, validation, criterion);
        result.log.push_back(entry);
        if (entry.criterion_value > best_value) {
            best_value = entry.criterion_value;
            best_epoch = epoch;
            best = current;
        }
    }

    result.log[static_cast<std::size_t>(best_epoch - 1)].selected = true;
    result.model = best;
    result.model.meta.seed = seed;
    result.model.meta.selected_epoch = best_epoch;
    result.model.meta.criterion_value = best_value;
    return result;
}

std::string format_training_log(const std::vector<EpochLog>& log) {
    std::ostringstream os;
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "epoch=%d mean_loss=%.6g criterion=%.6g selected=%d\n",
                      e.epoch, e.mean_loss, e.criterion_value, e.selected ? 1 : 0);
        os << buf;
    }
    return os.str();
}

}  // namespace cfpr
