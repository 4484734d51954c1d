scenario = {
    "id": "custom",
    "name": "custom",
}
