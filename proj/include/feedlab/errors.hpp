#pragma once

#include <stdexcept>
#include <string>

namespace feedlab {

struct Error : std::runtime_error {
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code(std::move(code)) {}
    std::string code;
};

#define FEEDLAB_ERROR(Name)                                                     \
    struct Name : Error {                                                       \
        explicit Name(const std::string& what = "") : Error(#Name, what) {}     \
    }

FEEDLAB_ERROR(DuplicatePostId);
FEEDLAB_ERROR(EmptyBatch);
FEEDLAB_ERROR(BackendUnavailable);
FEEDLAB_ERROR(UnscoredBatch);
FEEDLAB_ERROR(UnknownPrompt);
FEEDLAB_ERROR(PromptExpired);
FEEDLAB_ERROR(QuotasFull);
FEEDLAB_ERROR(OutOfStudyWindow);
FEEDLAB_ERROR(NoViews);
FEEDLAB_ERROR(MissingScore);
FEEDLAB_ERROR(RankDeficient);
FEEDLAB_ERROR(NonConvergence);
FEEDLAB_ERROR(DegenerateDesign);
FEEDLAB_ERROR(InsufficientData);
FEEDLAB_ERROR(AllCovariatesDropped);
FEEDLAB_ERROR(DegenerateArm);
FEEDLAB_ERROR(InvalidP);
FEEDLAB_ERROR(OverlappingTiers);
FEEDLAB_ERROR(EmptySample);
FEEDLAB_ERROR(DegenerateModerator);
FEEDLAB_ERROR(ZeroVariance);
FEEDLAB_ERROR(UnknownParticipant);
FEEDLAB_ERROR(StudyEnded);
FEEDLAB_ERROR(MalformedBatch);

#undef FEEDLAB_ERROR

} // namespace feedlab
