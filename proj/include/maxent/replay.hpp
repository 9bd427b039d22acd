#ifndef MAXENT_REPLAY_HPP
#define MAXENT_REPLAY_HPP

#include <cstddef>
#include <vector>

#include "maxent/common.hpp"

namespace maxent {

/// One environment step. The stored reward is already reward-scaled.
struct Transition {
    Vec s;
    Vec a;
    Vec s_next;
    double r = 0.0;
    bool done = false;
};

// Content hash used to fork a per-record noise stream; identical records get
// identical streams, so batch losses are invariant under batch permutation.
inline std::uint64_t transition_hash(const Transition& t) {
    std::uint64_t h = fnv1a(t.s);
    h = fnv1a(t.a, h);
    h = fnv1a(t.s_next, h);
    h = fnv1a(&t.r, sizeof(t.r), h);
    const unsigned char d = t.done ? 1 : 0;
    return fnv1a(&d, 1, h);
}

/// Fixed-capacity ring buffer with strictly FIFO eviction. Batch sampling is
/// uniform with replacement and always returns exactly the requested count.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        check(capacity >= 1, "ReplayBuffer: capacity must be positive");
    }

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }

    // i = 0 addresses the oldest stored transition.
    const Transition& at(std::size_t i) const {
        check(i < data_.size(), "ReplayBuffer::at: index out of range");
        const std::size_t base = data_.size() < capacity_ ? 0 : next_;
        return data_[(base + i) % data_.size()];
    }

    std::vector<Transition> sample(std::size_t batch, Rng& rng) const {
        check(!data_.empty(), "ReplayBuffer::sample: buffer is empty");
        std::vector<Transition> out;
        out.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i)
            out.push_back(data_[static_cast<std::size_t>(
                rng.uniform_int(static_cast<int>(data_.size())))]);
        return out;
    }

private:
    std::vector<Transition> data_;
    std::size_t capacity_;
    std::size_t next_ = 0;
};

}  // namespace maxent

#endif
