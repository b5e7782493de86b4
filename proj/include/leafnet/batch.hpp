#pragma once

#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "leafnet/augment.hpp"
#include "leafnet/dataset.hpp"
#include "leafnet/tensor.hpp"

// Online batch generation: uniform class sampling, per-image augmentation,
// normalization into training tensors.  A bounded queue decouples the
// augmentation workers from the training consumer.

namespace leafnet {

// ---------------------------------------------------------------------------
// Uniform-class sampling
// ---------------------------------------------------------------------------

struct BatchSlot {
    int class_id = 0;
    int index = 0;  // position within the class's training images
};

// Each slot draws a uniform class, then a uniform image within that class,
// independently and with replacement across slots.  Unbalanced training sets
// therefore still feed the network a uniform class distribution.
inline std::vector<BatchSlot> sample_batch(const std::vector<std::vector<int>>& train_by_class, int size, Rng& rng) {
    const int num_classes = int(train_by_class.size());
    if (num_classes == 0) throw StateError("sample_batch: no classes");
    std::vector<BatchSlot> slots;
    slots.reserve(size_t(size));
    for (int i = 0; i < size; ++i) {
        const int c = int(rng.uniform_int(0, num_classes - 1));
        const auto& pool = train_by_class[size_t(c)];
        if (pool.empty()) throw StateError("sample_batch: class " + std::to_string(c) + " has no training images");
        const int k = int(rng.uniform_int(0, int64_t(pool.size()) - 1));
        slots.push_back({c, k});
    }
    return slots;
}

// ---------------------------------------------------------------------------
// In-memory canvas store
// ---------------------------------------------------------------------------

// Preprocessed canvas images grouped by class, the producer's image source.
struct ImageStore {
    int canvas = 350;
    std::vector<std::string> classes;
    std::vector<std::vector<ImageU8>> images;  // [class][i]
    std::vector<std::vector<std::string>> refs;

    int num_classes() const { return int(classes.size()); }

    std::vector<std::vector<int>> index_lists() const {
        std::vector<std::vector<int>> out(images.size());
        for (size_t c = 0; c < images.size(); ++c) {
            out[c].resize(images[c].size());
            for (size_t i = 0; i < images[c].size(); ++i) out[c][size_t(i)] = int(i);
        }
        return out;
    }
};

// Loads the subset of a split (train or test items) into memory.
inline ImageStore load_image_store(const fs::path& root, const std::vector<SplitItem>& items,
                                   const std::vector<std::string>& classes, int canvas) {
    ImageStore store;
    store.canvas = canvas;
    store.classes = classes;
    store.images.resize(classes.size());
    store.refs.resize(classes.size());
    for (const auto& it : items) {
        ImageU8 img = load_image_any(root / it.path);
        if (img.height != canvas || img.width != canvas)
            throw DimensionError("cached image " + it.path + " is " + std::to_string(img.height) + "x" +
                                 std::to_string(img.width) + ", expected canvas " + std::to_string(canvas));
        store.images[size_t(it.class_id)].push_back(std::move(img));
        store.refs[size_t(it.class_id)].push_back(it.path);
    }
    return store;
}

// ---------------------------------------------------------------------------
// Batch producer
// ---------------------------------------------------------------------------

struct Batch {
    Tensor images;            // [B, 3, crop, crop], pixels scaled to [0,1]
    std::vector<int> labels;  // class ids
};

struct ProducerConfig {
    int batch_size = 32;
    TransformPolicy policy = TransformPolicy::tr();
    TransformGeometry geom;       // canvas/crop sizes
    int workers = 0;              // 0 = synchronous deterministic mode
    size_t queue_capacity = 4;
    uint64_t seed = 0;
    float pixel_offset = 0.0f;    // subtracted after the /255 scaling
};

// Emits a continuous stream of freshly augmented batches.  workers == 0 runs
// synchronously on the caller's thread and reproduces an exact batch sequence
// from the seed.  Asynchronous workers draw from per-worker streams keyed by
// worker index, so worker 0 generates the same batches as the synchronous
// mode (interleaving with other workers is scheduling-dependent).
class BatchProducer {
public:
    BatchProducer(const ImageStore& store, const ProducerConfig& cfg)
        : store_(store), cfg_(cfg), train_lists_(store.index_lists()) {
        cfg_.geom.validate();
        if (cfg_.policy.kind == PolicyKind::TF)
            throw ConfigError("batch producer supports T0 and TR policies only");
        if (cfg_.batch_size <= 0) throw ConfigError("batch size must be positive");
        if (cfg_.workers < 0) throw ConfigError("workers must be >= 0");
        if (cfg_.workers > 0) {
            for (int w = 0; w < cfg_.workers; ++w)
                threads_.emplace_back([this, w] { worker_loop(w); });
        } else {
            sync_batch_rng_ = Rng::stream(cfg_.seed, "batch", 0);
            sync_transform_rng_ = Rng::stream(cfg_.seed, "transform", 0);
        }
    }

    ~BatchProducer() { stop(); }

    BatchProducer(const BatchProducer&) = delete;
    BatchProducer& operator=(const BatchProducer&) = delete;

    Batch next() {
        if (cfg_.workers == 0) return make_batch(sync_batch_rng_, sync_transform_rng_);
        std::unique_lock<std::mutex> lock(mu_);
        consumer_cv_.wait(lock, [&] { return !queue_.empty() || failure_ || stopped_; });
        if (!queue_.empty()) {
            Batch b = std::move(queue_.front());
            queue_.pop_front();
            producer_cv_.notify_all();
            return b;
        }
        if (failure_) std::rethrow_exception(failure_);
        throw StateError("batch producer is stopped");
    }

    void stop() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            stopped_ = true;
        }
        producer_cv_.notify_all();
        consumer_cv_.notify_all();
        for (auto& t : threads_)
            if (t.joinable()) t.join();
        threads_.clear();
    }

private:
    Batch make_batch(Rng& batch_rng, Rng& transform_rng) {
        const int B = cfg_.batch_size, crop = cfg_.geom.crop;
        Batch out{Tensor({B, 3, crop, crop}), std::vector<int>(size_t(B), 0)};
        const std::vector<BatchSlot> slots = sample_batch(train_lists_, B, batch_rng);
        for (int i = 0; i < B; ++i) {
            const ImageU8& canvas = store_.images[size_t(slots[size_t(i)].class_id)][size_t(slots[size_t(i)].index)];
            TransformParams params = cfg_.policy.kind == PolicyKind::TR ? sample_tr(cfg_.geom, transform_rng)
                                                                        : identity_params(cfg_.geom);
            const ImageU8 view = apply_transform(canvas, params, cfg_.geom);
            float* dst = out.images.data() + int64_t(i) * 3 * crop * crop;
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < crop; ++y)
                    for (int x = 0; x < crop; ++x)
                        dst[(int64_t(c) * crop + y) * crop + x] =
                            float(view.at(y, x, c)) * (1.0f / 255.0f) - cfg_.pixel_offset;
            out.labels[size_t(i)] = slots[size_t(i)].class_id;
        }
        return out;
    }

    void worker_loop(int worker_id) {
        Rng batch_rng = Rng::stream(cfg_.seed, "batch", uint64_t(worker_id));
        Rng transform_rng = Rng::stream(cfg_.seed, "transform", uint64_t(worker_id));
        try {
            for (;;) {
                Batch b = make_batch(batch_rng, transform_rng);
                std::unique_lock<std::mutex> lock(mu_);
                producer_cv_.wait(lock, [&] { return queue_.size() < cfg_.queue_capacity || stopped_; });
                if (stopped_) return;
                queue_.push_back(std::move(b));
                consumer_cv_.notify_one();
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu_);
            if (!failure_) failure_ = std::current_exception();
            consumer_cv_.notify_all();
        }
    }

    const ImageStore& store_;
    ProducerConfig cfg_;
    std::vector<std::vector<int>> train_lists_;

    Rng sync_batch_rng_, sync_transform_rng_;

    std::mutex mu_;
    std::condition_variable consumer_cv_, producer_cv_;
    std::deque<Batch> queue_;
    bool stopped_ = false;
    std::exception_ptr failure_;
    std::vector<std::thread> threads_;
};

}  // namespace leafnet
