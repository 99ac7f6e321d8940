//! Shared fixture problems for integration tests; the prompt goldens are
//! rendered from exactly these.

use didact::dataset::{Problem, TaskKind};

pub fn khan() -> Problem {
    Problem {
        id: "sqa-khan".into(),
        question: "Are more people today related to Genghis Khan than Julius Caesar?".into(),
        choices: None,
        gold_answer: "yes".into(),
        human_explanation: "Julius Caesar had three children. Genghis Khan had sixteen children. \
                            Modern geneticists have determined that 1 out of every 200 men today \
                            has DNA that can be traced to Genghis Khan."
            .into(),
        task_kind: TaskKind::Boolean,
    }
}

pub fn albany() -> Problem {
    Problem {
        id: "sqa-albany".into(),
        question: "Will the Albany in Georgia reach a hundred thousand occupants before the one \
                   in New York?"
            .into(),
        choices: None,
        gold_answer: "no".into(),
        human_explanation: "Albany, Georgia is a city in the U.S. state of Georgia. Albany, \
                            Georgia has a population of 59,058. The Albany in New York has a \
                            population of 328,058."
            .into(),
        task_kind: TaskKind::Boolean,
    }
}

/// The student's own (pre-intervention) explanation of the Albany question.
pub fn albany_student_explanation() -> String {
    "Albany, Georgia is a city in the U.S. state of Georgia. Albany, Georgia has a population \
     of 59,080. The population of New York is 365,040."
        .into()
}

pub fn strawberries_deceiving() -> Problem {
    Problem {
        id: "sqa-strawberries".into(),
        question: "Would someone with back pain enjoy picking strawberries?".into(),
        choices: None,
        // Deceiving demonstration: wrong answer, perturbed explanation.
        gold_answer: "yes".into(),
        human_explanation: "Back pain may be worsened by repeated bending at the waist. \
                            Strawberries grow high up on the tree."
            .into(),
        task_kind: TaskKind::Boolean,
    }
}

pub fn brutal_killing() -> Problem {
    Problem {
        id: "csqa-killing".into(),
        question: "What might a person see at the scene of a brutal killing?".into(),
        choices: Some(vec![
            "bloody mess".into(),
            "pleasure".into(),
            "being imprisoned".into(),
            "feeling of guilt".into(),
            "cake".into(),
        ]),
        gold_answer: "bloody mess".into(),
        human_explanation: "Bloody mess is covered or stained with blood. A person might see a \
                            bloody mess at the scene of a brutal killing. Pleasure is about what \
                            a person sees at the scene of a brutal killing and one cannot be \
                            happy to see such brutality. You can't see someone in jail at the \
                            brutal killing scene. Feeling of guilt doesn't come as the killing \
                            is brutal or merciless. Cake is baseless and weird to think as it is \
                            a brutal killing scene and not a bakery."
            .into(),
        task_kind: TaskKind::Multichoice,
    }
}

pub fn work_aims() -> Problem {
    Problem {
        id: "csqa-work".into(),
        question: "What do people aim to do at work?".into(),
        choices: Some(vec![
            "complete job".into(),
            "learn from each other".into(),
            "kill animals".into(),
            "wear hats".into(),
            "talk to each other".into(),
        ]),
        gold_answer: "complete job".into(),
        human_explanation: "People try to complete the tasks their job requires of them.".into(),
        task_kind: TaskKind::Multichoice,
    }
}

pub fn natalia() -> Problem {
    Problem {
        id: "gsm-natalia".into(),
        question: "Natalia sold clips to 48 of her friends in April, and then she sold half as \
                   many clips in May. How many clips did Natalia sell altogether in April and May?"
            .into(),
        choices: None,
        gold_answer: "72".into(),
        human_explanation: "Natalia sold 48/2 = 24 clips in May. Natalia sold 48+24 = 72 clips \
                            altogether in April and May."
            .into(),
        task_kind: TaskKind::Numeric,
    }
}

pub fn weng() -> Problem {
    Problem {
        id: "gsm-weng".into(),
        question: "Weng earns $12 an hour for babysitting. Yesterday, she just did 50 minutes of \
                   babysitting. How much did she earn?"
            .into(),
        choices: None,
        gold_answer: "10".into(),
        human_explanation: "Weng earns 12/60 = $0.2 per minute. Working 50 minutes, she earned \
                            0.2 x 50 = $10."
            .into(),
        task_kind: TaskKind::Numeric,
    }
}
