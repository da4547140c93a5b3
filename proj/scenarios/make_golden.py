# Regenerates golden_workflow.program.json (scripted provider rules).
import json

def out(elements):
    return json.dumps({"elements": elements})

def el(kind, text=None, image=None, **attrs):
    e = {"kind": kind, "attributes": {k.replace("_", " "): v for k, v in attrs.items()}}
    if image is not None:
        e["image_prompt"] = image
    else:
        e["text"] = text
    return e

names = ["Mira", "Otto", "Vale"]
rules = []

def rule(role, kind, output, contains=None, times=None, purpose="tool"):
    r = {"role": role, "task_kind": kind, "purpose": purpose, "output": output}
    if contains:
        r["instruction_contains"] = contains
    if times:
        r["times"] = times
    rules.append(r)

rule("ideation", "story_concept", out([
    el("story-option", "An architect who builds dreams loses the blueprint of her own.", title="The Lost Blueprint"),
    el("story-option", "A city of dreams collapses each dawn and must be rebuilt.", title="Dawn Rebuild"),
    el("story-option", "Two rival dream architects share one sleeper.", title="Shared Sleeper"),
]), contains="darker", times=None)
rules[-1]["output"] = out([
    el("story-option", "The architect discovers her dreams are prisons she built for others.", title="Prison of Sleep"),
])
rule("ideation", "story_concept", out([
    el("story-option", "An architect who builds dreams loses the blueprint of her own.", title="The Lost Blueprint"),
    el("story-option", "A city of dreams collapses each dawn and must be rebuilt.", title="Dawn Rebuild"),
    el("story-option", "Two rival dream architects share one sleeper.", title="Shared Sleeper"),
]))
rule("ideation", "style_description", out([
    el("style-option", "Soft watercolor washes with ink linework, muted blues.", title="Ink Wash"),
]))
rule("ideation", "character_concept", out([
    el("character-entry", "A meticulous dream architect haunted by a missing plan.", name="Mira", role="protagonist"),
    el("character-entry", "A clockwork assistant who remembers every dream.", name="Otto", role="companion"),
    el("character-entry", "A rival architect who builds nightmares.", name="Vale", role="antagonist"),
]))
for n in names:
    rule("design", "character_sheet", out([
        el("image-asset", image=f"Turnaround sheet of {n}, watercolor and ink", name=n),
        el("text-field", f"{n}: silhouette, palette and expression notes."),
    ]), contains=f"Character: {n}")
rule("scripting", "story_outline", out([
    el("outline-beat", "Mira wakes inside an unfinished dream.", beat_number="1"),
    el("outline-beat", "Otto helps her trace the missing blueprint.", beat_number="2"),
    el("outline-beat", "Vale confronts them in a collapsing tower.", beat_number="3"),
]))
rule("scripting", "scene_list", out([
    el("scene-entry", "Mira walks through half-built corridors.", scene_number="1", location="Dream tower",
       time_of_day="night", characters="Mira, Otto", description="Opening in the unfinished dream",
       styleframe_slot=""),
    el("scene-entry", "Vale reshapes the tower into a maze.", scene_number="2", location="Maze",
       time_of_day="dawn", characters="Mira and Vale", description="Confrontation", styleframe_slot=""),
]))
rule("art", "storyboard_sequence", out([
    el("shot-panel", image="Wide shot of Mira in half-built corridors", shot_number="1", scene_number="1",
       camera="wide", action="Mira enters"),
    el("shot-panel", image="Close up of Otto holding a torn blueprint", shot_number="2", scene_number="1",
       camera="close", action="Otto shows the plan"),
]))
rules.append({"role": "core", "purpose": "chat", "output": "Happy to help with that."})

with open("golden_workflow.program.json", "w") as f:
    json.dump({"rules": rules}, f, indent=2)
    f.write("\n")
