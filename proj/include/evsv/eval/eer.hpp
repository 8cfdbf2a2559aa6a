#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "evsv/core/error.hpp"

namespace evsv::eval {

enum class Emotion { Neutral, Calm, Angry, Happy, Sad };

inline const char* to_string(Emotion e) {
    switch (e) {
        case Emotion::Neutral: return "neutral";
        case Emotion::Calm: return "calm";
        case Emotion::Angry: return "angry";
        case Emotion::Happy: return "happy";
        case Emotion::Sad: return "sad";
    }
    return "?";
}

inline Emotion parse_emotion(const std::string& s) {
    if (s == "neutral") return Emotion::Neutral;
    if (s == "calm") return Emotion::Calm;
    if (s == "angry") return Emotion::Angry;
    if (s == "happy") return Emotion::Happy;
    if (s == "sad") return Emotion::Sad;
    fail("invalid emotion: " + s);
}

constexpr Emotion kAllEmotions[] = {Emotion::Neutral, Emotion::Calm, Emotion::Angry,
                                    Emotion::Happy, Emotion::Sad};

// One verification attempt: an utterance scored against an enrolled profile.
struct Trial {
    std::string profile_speaker;
    std::string utterance_speaker;
    Emotion emotion = Emotion::Neutral;
    double score = 0.0;
    bool is_target = false;
};

struct TrialScoreSet {
    std::vector<Trial> trials;

    void add(std::string profile, std::string speaker, Emotion emo, double score) {
        Trial t;
        t.is_target = profile == speaker;
        t.profile_speaker = std::move(profile);
        t.utterance_speaker = std::move(speaker);
        t.emotion = emo;
        t.score = score;
        trials.push_back(std::move(t));
    }
};

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
};

namespace detail {

inline void split_scores(const TrialScoreSet& s, std::vector<double>& targets,
                         std::vector<double>& impostors) {
    for (const Trial& t : s.trials) {
        require(std::isfinite(t.score), "non-finite trial score");
        (t.is_target ? targets : impostors).push_back(t.score);
    }
}

}  // namespace detail

// EER via a sweep over all distinct scores, linearly interpolated between
// the bracketing operating points. The interpolation is parameterized by
// position along the (FAR, FRR) step sequence, so the result is invariant
// under strictly increasing transforms of the scores.
inline EerResult compute_eer(const TrialScoreSet& s) {
    std::vector<double> targets, impostors;
    detail::split_scores(s, targets, impostors);
    require(!targets.empty() && !impostors.empty(), "degenerate trial set");

    std::sort(targets.begin(), targets.end());
    std::sort(impostors.begin(), impostors.end());

    std::vector<double> thresholds;
    thresholds.reserve(targets.size() + impostors.size() + 2);
    for (double v : targets) thresholds.push_back(v);
    for (double v : impostors) thresholds.push_back(v);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());
    thresholds.insert(thresholds.begin(), thresholds.front() - 1.0);
    thresholds.push_back(thresholds.back() + 1.0);

    const double n_tgt = static_cast<double>(targets.size());
    const double n_imp = static_cast<double>(impostors.size());
    auto far_at = [&](double t) {
        const auto it = std::lower_bound(impostors.begin(), impostors.end(), t);
        return static_cast<double>(impostors.end() - it) / n_imp;
    };
    auto frr_at = [&](double t) {
        const auto it = std::lower_bound(targets.begin(), targets.end(), t);
        return static_cast<double>(it - targets.begin()) / n_tgt;
    };

    double far_prev = far_at(thresholds[0]);
    double frr_prev = frr_at(thresholds[0]);
    double t_prev = thresholds[0];
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        const double far_cur = far_at(thresholds[i]);
        const double frr_cur = frr_at(thresholds[i]);
        if (frr_cur >= far_cur) {
            const double d1 = far_prev - frr_prev;  // >= 0
            const double d2 = far_cur - frr_cur;    // <= 0
            const double u = (d1 - d2) > 0.0 ? d1 / (d1 - d2) : 0.0;
            EerResult r;
            r.eer = far_prev + u * (far_cur - far_prev);
            r.threshold = t_prev + u * (thresholds[i] - t_prev);
            return r;
        }
        far_prev = far_cur;
        frr_prev = frr_cur;
        t_prev = thresholds[i];
    }
    fail("eer sweep found no crossing");
}

inline double far_at_threshold(const TrialScoreSet& s, double threshold) {
    std::vector<double> targets, impostors;
    detail::split_scores(s, targets, impostors);
    require(!impostors.empty(), "degenerate trial set");
    std::size_t accepted = 0;
    for (double v : impostors) {
        if (v >= threshold) ++accepted;
    }
    return static_cast<double>(accepted) / static_cast<double>(impostors.size());
}

inline double frr_at_threshold(const TrialScoreSet& s, double threshold) {
    std::vector<double> targets, impostors;
    detail::split_scores(s, targets, impostors);
    require(!targets.empty(), "degenerate trial set");
    std::size_t rejected = 0;
    for (double v : targets) {
        if (v < threshold) ++rejected;
    }
    return static_cast<double>(rejected) / static_cast<double>(targets.size());
}

// Smallest observed score with FAR <= target on the dev impostors.
inline double calibrate_threshold(const TrialScoreSet& dev, double target_far) {
    std::vector<double> targets, impostors;
    detail::split_scores(dev, targets, impostors);
    require(!impostors.empty(), "degenerate trial set");
    std::sort(impostors.begin(), impostors.end());
    const double n = static_cast<double>(impostors.size());
    for (std::size_t i = 0; i < impostors.size(); ++i) {
        if (i > 0 && impostors[i] == impostors[i - 1]) continue;
        const auto it = std::lower_bound(impostors.begin(), impostors.end(),
                                         impostors[i]);
        const double far = static_cast<double>(impostors.end() - it) / n;
        if (far <= target_far) return impostors[i];
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace evsv::eval
