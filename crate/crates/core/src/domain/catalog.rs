use super::{UseCase, UseCaseProfile};

fn case(id: &str, name: &str, description: &str, trl: u8, profile: [&str; 5]) -> UseCase {
    let [intended_function, intended_users, context_of_use, known_limitations, deployment_environment] =
        profile.map(str::to_string);
    UseCase {
        id: id.to_string(),
        name: name.to_string(),
        description: description.to_string(),
        trl,
        profile: Some(UseCaseProfile {
            intended_function,
            intended_users,
            context_of_use,
            known_limitations,
            deployment_environment,
        }),
    }
}

/// The four reference use cases, ordered by decreasing readiness.
pub fn builtin_use_cases() -> Vec<UseCase> {
    vec![
        case(
            "chatbot-companion",
            "Chatbot Companion",
            "An AI chatbot that provides conversation and emotional support at any time of day. \
             It is designed to help people who feel lonely or who want a steady source of dialogue \
             and reassurance. The intended users are people who seek companionship outside normal \
             social or family circles.",
            9,
            [
                "Conversation and emotional support at any time of day.",
                "People who seek companionship outside normal social or family circles.",
                "Everyday private use by people who feel lonely or want steady reassurance.",
                "Not a substitute for professional care; responses can be wrong or inappropriate.",
                "Consumer mobile and web platforms, deployed at scale.",
            ],
        ),
        case(
            "ai-toy",
            "AI Toy",
            "A soft toy with built-in AI that answers children's questions about science in clear, \
             spoken language. It is meant to spark curiosity and give comfort while children \
             explore ideas. The main users are children aged 5-12 and their parents or carers, \
             who want both play and learning.",
            7,
            [
                "Answers children's science questions in clear spoken language.",
                "Children aged 5-12 and their parents or carers.",
                "Play and learning at home.",
                "Not yet certified against regulatory standards for child products.",
                "Voice-activated household devices in beta release.",
            ],
        ),
        case(
            "griefbot",
            "Griefbot",
            "A digital avatar that imitates a deceased family member. It produces text or voice \
             responses based on past records, such as old messages, in order to give users the \
             sense of ongoing contact. The intended users are people who wish to maintain a form \
             of connection with the dead.",
            5,
            [
                "Imitates a deceased family member through text or voice responses.",
                "People who wish to maintain a form of connection with the dead.",
                "Private mourning, built from past records such as old messages.",
                "Fidelity, ethical safeguards and regulation remain unresolved.",
                "Small-scale trials of interactive avatars.",
            ],
        ),
        case(
            "death-app",
            "Death App",
            "An AI-powered platform that matches individuals seeking to end their lives with \
             service providers and shows transition plans similar to those provided by \
             end-of-life doulas. The intended users are people considering assisted dying.",
            2,
            [
                "Matches individuals with assisted-dying service providers and shows transition plans.",
                "People considering assisted dying.",
                "End-of-life planning under restrictive legal conditions.",
                "Conceptual only; legality varies by jurisdiction.",
                "Not deployed; exists as a concept.",
            ],
        ),
    ]
}
